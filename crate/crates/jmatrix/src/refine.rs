//! Second step for data with a bound state: move λ_0 and the two outer
//! last-row weights so the finite-rank S-matrix has its pole and residue at
//! prescribed (κ, 𝓜), keeping every other spectral entry untouched.

use nalgebra::{Matrix3, Vector3};

use crate::error::{ForwardError, RefineError};
use crate::forward::{spectral_to_jacobi, Basis, JacobiHamiltonian, SpectralData};
use crate::oscillator::{self, OscParams};

const MAX_ITER: usize = 100;

/// Tail values at the target pole; independent of the unknowns.
struct Pole {
    energy: f64,
    de_dkappa: f64,
    tau: f64,
    fp: (f64, f64),
    fm: (f64, f64),
    dfp: (f64, f64),
}

impl Pole {
    fn new(p: &OscParams, n: usize, kappa: f64) -> Result<Self, RefineError> {
        let rho = p.rho;
        let f = |m: usize, kap: f64, sign: f64| -> Result<f64, ForwardError> {
            Ok(oscillator::cpm_imag_axis(m, p, kap * rho, sign)?)
        };
        let h = 1e-5 * (kappa * rho).max(1.0) / rho;
        let d = |m: usize| -> Result<f64, ForwardError> {
            Ok((f(m, kappa - 2.0 * h, 1.0)? - 8.0 * f(m, kappa - h, 1.0)? + 8.0 * f(m, kappa + h, 1.0)?
                - f(m, kappa + 2.0 * h, 1.0)?)
                / (12.0 * h))
        };
        Ok(Pole {
            energy: -0.5 * (kappa * rho).powi(2),
            de_dkappa: -kappa * rho * rho,
            tau: oscillator::kinetic_elem(n - 1, n, p.ell),
            fp: (f(n - 1, kappa, 1.0)?, f(n, kappa, 1.0)?),
            fm: (f(n - 1, kappa, -1.0)?, f(n, kappa, -1.0)?),
            dfp: (d(n - 1)?, d(n)?),
        })
    }
}

fn corner(s: &SpectralData, e: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for (l, z) in s.lambda.iter().zip(&s.zlast) {
        let r = 1.0 / (e - l);
        p += z * z * r;
        dp -= z * z * r * r;
    }
    (p, dp)
}

/// (denominator, numerator, d denominator/dκ) of S at the target pole.
fn pole_terms(s: &SpectralData, pole: &Pole) -> (f64, f64, f64) {
    let (p, dp) = corner(s, pole.energy);
    let t = pole.tau;
    let d = pole.fp.0 - p * t * pole.fp.1;
    let num = pole.fm.0 - p * t * pole.fm.1;
    let dd = pole.dfp.0 - dp * pole.de_dkappa * t * pole.fp.1 - p * t * pole.dfp.1;
    (d, num, dd)
}

/// Pole value and residue-derived 𝓜² implied by spectral data at κ.
pub fn pole_residual(s: &SpectralData, p: &OscParams, kappa: f64) -> Result<(f64, f64), RefineError> {
    let pole = Pole::new(p, s.lambda.len(), kappa)?;
    let (d, num, dd) = pole_terms(s, &pole);
    let parity = if p.ell.is_multiple_of(2) { -1.0 } else { 1.0 };
    Ok((d, parity * num / dd))
}

fn with_unknowns(base: &SpectralData, x: &Vector3<f64>) -> SpectralData {
    let mut s = base.clone();
    let last = s.zlast.len() - 1;
    s.lambda[0] = x[0];
    s.zlast[0] = x[1].max(0.0).sqrt();
    s.zlast[last] = x[2].max(0.0).sqrt();
    s
}

/// Refine (λ_0, Z_{N−1,0}, Z_{N−1,N−1}) so that the pole sits at κ_target
/// with 𝓜 = m_target; solved by damped Newton in (λ_0, Z_0², Z_{N−1}²).
pub fn refine(s: &SpectralData, p: &OscParams, kappa_target: f64, m_target: f64) -> Result<SpectralData, RefineError> {
    let n = s.lambda.len();
    if n < 2 || s.zlast.len() != n {
        return Err(RefineError::Invalid("need at least two spectral entries".into()));
    }
    if !(kappa_target > 0.0) || !(m_target > 0.0) {
        return Err(RefineError::Invalid("targets must be positive".into()));
    }
    let pole = Pole::new(p, n, kappa_target)?;
    let parity = if p.ell.is_multiple_of(2) { -1.0 } else { 1.0 };
    let d_scale = pole.fp.0.abs().max(f64::MIN_POSITIVE);
    let m2 = m_target * m_target;
    let resid = |x: &Vector3<f64>| -> Vector3<f64> {
        let t = with_unknowns(s, x);
        let (d, num, dd) = pole_terms(&t, &pole);
        let zn: f64 = t.zlast.iter().map(|z| z * z).sum::<f64>() - 1.0;
        Vector3::new(zn, d / d_scale, parity * num / (dd * m2) - 1.0)
    };
    let last = n - 1;
    let mut x = Vector3::new(s.lambda[0], s.zlast[0].powi(2), s.zlast[last].powi(2));
    let mut r = resid(&x);
    for _ in 0..MAX_ITER {
        if r.amax() < 1e-14 {
            break;
        }
        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            let h = 1e-7 * x[j].abs().max(1e-3);
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            jac.set_column(j, &((resid(&xp) - resid(&xm)) / (2.0 * h)));
        }
        let Some(step) = jac.lu().solve(&(-r)) else {
            return Err(RefineError::NoConvergence { iterations: MAX_ITER, residual: r.amax() });
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let xn = x + step * lambda;
            if xn[1] > 0.0 && xn[2] > 0.0 && xn[0] < s.lambda[1] {
                let rn = resid(&xn);
                if rn.amax() < r.amax() {
                    x = xn;
                    r = rn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !(r.amax() < 1e-10) {
        return Err(RefineError::NoConvergence { iterations: MAX_ITER, residual: r.amax() });
    }
    if !(x[0] < s.lambda[1]) {
        return Err(RefineError::Ordering { lambda0: x[0], lambda1: s.lambda[1] });
    }
    Ok(with_unknowns(s, &x))
}

/// Refine and rebuild the Jacobi matrix in the oscillator basis.
pub fn refine_hamiltonian(
    s: &SpectralData,
    p: &OscParams,
    kappa_target: f64,
    m_target: f64,
) -> Result<(SpectralData, JacobiHamiltonian), RefineError> {
    let refined = refine(s, p, kappa_target, m_target)?;
    let h = spectral_to_jacobi(&refined, Basis::Oscillator(*p))?;
    Ok((refined, h))
}
