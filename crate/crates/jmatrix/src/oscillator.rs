//! Harmonic-oscillator basis: kinetic matrix and free solutions.
//!
//! Momenta enter through q = k·rho and energies through eps = q²/2 in
//! units of the oscillator quantum.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::BasisError;
use crate::quadrature::Rule;
use crate::special_fn::{kummer_seed, laguerre, ln_gamma};

/// Free solutions are refused beyond this q.
pub const Q_LIMIT: f64 = 12.0;
/// Largest basis index served.
pub const N_LIMIT: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscParams {
    pub ell: u32,
    pub rho: f64,
}

impl OscParams {
    pub fn new(ell: u32, rho: f64) -> Result<Self, BasisError> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(BasisError::Parameter { what: "rho", value: rho });
        }
        Ok(OscParams { ell, rho })
    }

    fn l(&self) -> f64 {
        self.ell as f64
    }

    /// sqrt(pi rho n! / Gamma(n + l + 3/2))
    fn prefactor(&self, n: usize) -> f64 {
        let ln = ln_gamma(n as f64 + 1.0).unwrap() - ln_gamma(n as f64 + self.l() + 1.5).unwrap();
        (0.5 * (PI.ln() + self.rho.ln() + ln)).exp()
    }

    fn gamma_l_half(&self) -> f64 {
        ln_gamma(self.l() + 0.5).unwrap().exp()
    }
}

pub fn kinetic_elem(n: usize, m: usize, ell: u32) -> f64 {
    let l = ell as f64;
    if n == m {
        (2.0 * n as f64 + l + 1.5) / 2.0
    } else if n.abs_diff(m) == 1 {
        let k = n.min(m) as f64;
        -0.5 * ((k + 1.0) * (k + l + 1.5)).sqrt()
    } else {
        0.0
    }
}

fn check(n: usize, q: f64) -> Result<(), BasisError> {
    if n > N_LIMIT {
        return Err(BasisError::Range { what: "n", value: n as f64, limit: N_LIMIT as f64 });
    }
    // the tolerance absorbs rounding in q = (Q_LIMIT/ρ)·ρ
    if !(q > 0.0) || q > Q_LIMIT * (1.0 + 4.0 * f64::EPSILON) {
        return Err(BasisError::Range { what: "q", value: q, limit: Q_LIMIT });
    }
    Ok(())
}

/// Oscillator function phi_n(r) with the alternating-sign convention.
pub fn basis_fn(n: usize, p: &OscParams, r: f64) -> f64 {
    let x = r / p.rho;
    let ln = ln_gamma(n as f64 + 1.0).unwrap() - ln_gamma(n as f64 + p.l() + 1.5).unwrap();
    let norm = (0.5 * (2f64.ln() + ln - p.rho.ln())).exp();
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * norm * x.powi(p.ell as i32 + 1) * (-0.5 * x * x).exp() * laguerre(n, p.l() + 0.5, x * x)
}

pub fn wavefunction(coeffs: &[f64], p: &OscParams, r: f64) -> f64 {
    coeffs.iter().enumerate().map(|(n, c)| c * basis_fn(n, p, r)).sum()
}

pub fn sine(n: usize, p: &OscParams, q: f64) -> Result<f64, BasisError> {
    check(n, q)?;
    Ok(p.prefactor(n) * q.powi(p.ell as i32 + 1) * (-0.5 * q * q).exp() * laguerre(n, p.l() + 0.5, q * q))
}

/// Cosine-like solution from a single Kummer evaluation.
pub fn cosine(n: usize, p: &OscParams, q: f64) -> Result<f64, BasisError> {
    check(n, q)?;
    let l = p.l();
    let m = kummer_seed(-(n as f64) - l - 0.5, 0.5 - l, q * q)?;
    Ok(p.prefactor(n) * p.gamma_l_half() / (PI * q.powi(p.ell as i32)) * (-0.5 * q * q).exp() * m.value)
}

pub fn sine_table(nmax: usize, p: &OscParams, q: f64) -> Result<Vec<f64>, BasisError> {
    (0..=nmax).map(|n| sine(n, p, q)).collect()
}

/// C_0..C_nmax: the two top entries from Kummer seeds, the rest by the
/// free three-term recursion run downward, which is the stable direction
/// once q² exceeds the turning point of the lower indices.
pub fn cosine_table(nmax: usize, p: &OscParams, q: f64) -> Result<Vec<f64>, BasisError> {
    check(nmax, q)?;
    let mut c = vec![0.0; nmax + 1];
    c[nmax] = cosine(nmax, p, q)?;
    if nmax == 0 {
        return Ok(c);
    }
    c[nmax - 1] = cosine(nmax - 1, p, q)?;
    let eps = 0.5 * q * q;
    for n in (1..nmax).rev() {
        let t = |a, b| kinetic_elem(a, b, p.ell);
        c[n - 1] = ((eps - t(n, n)) * c[n] - t(n, n + 1) * c[n + 1]) / t(n, n - 1);
    }
    Ok(c)
}

/// C^(±) = C ± iS on the real axis.
pub fn cpm(n: usize, p: &OscParams, q: f64, sign: f64) -> Result<Complex64, BasisError> {
    Ok(Complex64::new(cosine(n, p, q)?, sign * sine(n, p, q)?))
}

/// i^l C^(±)_n(it) evaluated in real arithmetic.
///
/// The decaying member is taken from the integral representation of the
/// Tricomi function, whose integrand is positive, so it keeps full relative
/// accuracy where the closed form would cancel to e^{-t²}. The growing member
/// follows from it by adding back twice the sine part.
pub fn cpm_imag_axis(n: usize, p: &OscParams, t: f64, sign: f64) -> Result<f64, BasisError> {
    if !(t > 0.0) || t * t > crate::special_fn::KUMMER_Z_LIMIT {
        return Err(BasisError::Range { what: "t", value: t, limit: Q_LIMIT });
    }
    if n > N_LIMIT {
        return Err(BasisError::Range { what: "n", value: n as f64, limit: N_LIMIT as f64 });
    }
    let l = p.l();
    let parity = if p.ell.is_multiple_of(2) { -1.0 } else { 1.0 };
    let sin_part = parity * t.powi(p.ell as i32 + 1) * (0.5 * t * t).exp() * laguerre(n, l + 0.5, -t * t);
    let decaying = if t < 0.5 {
        let m = kummer_seed(-(n as f64) - l - 0.5, 0.5 - l, -t * t)?;
        p.gamma_l_half() / (PI * t.powi(p.ell as i32)) * (0.5 * t * t).exp() * m.value + sin_part
    } else {
        tricomi_integral(n, p.ell, t) / (PI * t.powi(p.ell as i32)) * (-0.5 * t * t).exp()
    };
    let value = if sign > 0.0 { decaying } else { decaying - 2.0 * sin_part };
    Ok(p.prefactor(n) * value)
}

/// ∫_0^∞ 2 s^{2n+2l+2} e^{-s²} (t²+s²)^{-n-1} ds
fn tricomi_integral(n: usize, ell: u32, t: f64) -> f64 {
    let (pw, den) = ((2 * n + 2 * ell as usize + 2) as i32, (n + 1) as i32);
    let f = |s: f64| 2.0 * s.powi(pw) * (-s * s).exp() / (t * t + s * s).powi(den);
    let upper = ((n + ell as usize) as f64 + 1.5).sqrt() + 9.0;
    let rule = Rule::new(24);
    // Panels are refined toward the origin on the scale t.
    let mut edges = vec![0.0, 0.25 * t, 0.5 * t, t, 2.0 * t];
    let mut x = 2.0 * t;
    while x < upper {
        x = (x + 1.0).min(upper);
        edges.push(x);
    }
    edges.retain(|&e| e <= upper);
    edges.windows(2).map(|w| rule.integrate(w[0], w[1], f)).sum()
}

/// S and C tables on a q grid, with the discrete-Wronskian spread.
#[derive(Debug, Clone)]
pub struct FreeSolutionSet {
    pub params: OscParams,
    pub grid: Vec<f64>,
    pub s: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub casoratian_defect: f64,
}

impl FreeSolutionSet {
    pub fn new(params: OscParams, grid: &[f64], nmax: usize) -> Result<Self, BasisError> {
        let mut s = Vec::with_capacity(grid.len());
        let mut c = Vec::with_capacity(grid.len());
        let mut defect = 0.0f64;
        for &q in grid {
            let sv = sine_table(nmax, &params, q)?;
            let cv = cosine_table(nmax, &params, q)?;
            defect = defect.max(casoratian_spread(&params, &sv, &cv));
            s.push(sv);
            c.push(cv);
        }
        Ok(FreeSolutionSet { params, grid: grid.to_vec(), s, c, casoratian_defect: defect })
    }
}

/// T_{n,n+1}(C_{n+1}S_n − C_nS_{n+1}) for each n.
pub fn casoratian(p: &OscParams, s: &[f64], c: &[f64]) -> Vec<f64> {
    (0..s.len().saturating_sub(1))
        .map(|n| kinetic_elem(n, n + 1, p.ell) * (c[n + 1] * s[n] - c[n] * s[n + 1]))
        .collect()
}

fn casoratian_spread(p: &OscParams, s: &[f64], c: &[f64]) -> f64 {
    let w = casoratian(p, s, c);
    if w.len() < 2 {
        return 0.0;
    }
    let w0 = w[0];
    w.iter().map(|x| ((x - w0) / w0).abs()).fold(0.0, f64::max)
}
