//! Direct problem for a finite Jacobi Hamiltonian matched to the free tail:
//! corner Green function, phase shift, S-matrix, bound states, spectral data.
//!
//! Momenta are physical throughout (the oscillator basis converts with
//! q = kρ internally), and so are bound-state κ values.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use roots::{find_root_brent, Convergency};

use crate::error::{BasisError, ForwardError};
use crate::laguerre::{self, CombinedBasis};
use crate::oscillator::{self, OscParams};

#[derive(Debug, Clone)]
pub enum Basis {
    Oscillator(OscParams),
    Laguerre(CombinedBasis),
}

impl Basis {
    pub fn ell(&self) -> u32 {
        match self {
            Basis::Oscillator(p) => p.ell,
            Basis::Laguerre(cb) => cb.params.ell,
        }
    }

    /// Length scale: ρ for the oscillator, b for Laguerre.
    pub fn scale(&self) -> f64 {
        match self {
            Basis::Oscillator(p) => p.rho,
            Basis::Laguerre(cb) => cb.params.bscale,
        }
    }

    /// Free (kinetic) block of order n.
    pub fn free_block(&self, n: usize) -> DMatrix<f64> {
        match self {
            Basis::Oscillator(p) => DMatrix::from_fn(n, n, |i, j| oscillator::kinetic_elem(i, j, p.ell)),
            Basis::Laguerre(cb) => cb.t.clone(),
        }
    }

    pub fn free_elem(&self, i: usize, j: usize) -> f64 {
        match self {
            Basis::Oscillator(p) => oscillator::kinetic_elem(i, j, p.ell),
            Basis::Laguerre(cb) => cb.t_elem(i, j),
        }
    }

    /// Energy at real momentum k in the units the Hamiltonian uses.
    pub fn energy(&self, k: f64) -> f64 {
        match self {
            Basis::Oscillator(p) => 0.5 * (k * p.rho).powi(2),
            Basis::Laguerre(_) => k * k,
        }
    }

    pub fn energy_imag(&self, kappa: f64) -> f64 {
        -self.energy(kappa)
    }

    /// Momentum at a (positive) energy; inverse of [`Basis::energy`].
    pub fn momentum(&self, energy: f64) -> f64 {
        match self {
            Basis::Oscillator(p) => (2.0 * energy).sqrt() / p.rho,
            Basis::Laguerre(_) => energy.sqrt(),
        }
    }

    /// Coupling τ(E) in f_{N−1} = 𝒫(E)·τ(E)·f_N.
    fn tau(&self, n: usize, energy: f64) -> f64 {
        match self {
            Basis::Oscillator(p) => oscillator::kinetic_elem(n - 1, n, p.ell),
            Basis::Laguerre(cb) => cb.d_last * cb.tail_coupling(energy),
        }
    }

    /// Coupling of row N−1 to f_N in the interior equations.
    fn row_coupling(&self, n: usize, energy: f64) -> f64 {
        match self {
            Basis::Oscillator(p) => oscillator::kinetic_elem(n - 1, n, p.ell),
            Basis::Laguerre(cb) => cb.tail_coupling(energy),
        }
    }

    /// Ratio between the interior coefficient c_{N−1} and the plain f_{N−1}.
    fn last_weight(&self) -> f64 {
        match self {
            Basis::Oscillator(_) => 1.0,
            Basis::Laguerre(cb) => 1.0 / cb.d_last,
        }
    }

    /// Plain free solutions (S_{N−1}, S_N, C^(+)_{N−1}, C^(+)_N) at real k.
    fn tail(&self, n: usize, k: f64) -> Result<(f64, f64, Complex64, Complex64), BasisError> {
        match self {
            Basis::Oscillator(p) => {
                let q = k * p.rho;
                Ok((
                    oscillator::sine(n - 1, p, q)?,
                    oscillator::sine(n, p, q)?,
                    oscillator::cpm(n - 1, p, q, 1.0)?,
                    oscillator::cpm(n, p, q, 1.0)?,
                ))
            }
            Basis::Laguerre(cb) => {
                let lp = &cb.params;
                let s = laguerre::lag_sine_table(n, lp, k)?;
                Ok((s[n - 1], s[n], laguerre::lag_cpm(n - 1, lp, k, 1.0)?, laguerre::lag_cpm(n, lp, k, 1.0)?))
            }
        }
    }

    /// i^ℓ C^(±) at iκ for indices N−1 and N, divided by a common factor
    /// that is returned third. Laguerre values carry (−ξ)^{±N} and (2 sin ζ)^{−ℓ},
    /// which vanish at κ = b and would plant a spurious root there.
    fn tail_imag(&self, n: usize, kappa: f64, sign: f64) -> Result<(f64, f64, f64), BasisError> {
        match self {
            Basis::Oscillator(p) => Ok((
                oscillator::cpm_imag_axis(n - 1, p, kappa * p.rho, sign)?,
                oscillator::cpm_imag_axis(n, p, kappa * p.rho, sign)?,
                1.0,
            )),
            Basis::Laguerre(cb) => {
                let lp = &cb.params;
                let b = lp.bscale;
                let x = (b - kappa) / (b + kappa);
                let two_sin = 4.0 * b * kappa / (b * b - kappa * kappa);
                let s = if sign > 0.0 { 1 } else { -1 };
                let factor = (-x).powi(s * n as i32) / two_sin.powi(lp.ell as i32);
                let f = |m: usize| -> Result<f64, BasisError> {
                    // recompute without the common factor
                    let g = crate::special_fn::gauss_2f1_terminating(
                        lp.ell,
                        m as u32 + 1,
                        m as u32 + lp.ell + 2,
                        Complex64::new(x.powi(2 * s), 0.0),
                    );
                    let rising: f64 = (1..=lp.ell as usize + 1).map(|j| (m + j) as f64).product();
                    let extra = (-x).powi(s * (m as i32 + 1 - n as i32));
                    Ok(-extra * g.re / rising)
                };
                if !(kappa > 0.0) || (kappa - b).abs() < 1e-12 * b {
                    return Err(BasisError::Range { what: "kappa", value: kappa, limit: b });
                }
                Ok((f(n - 1)?, f(n)?, factor))
            }
        }
    }

    fn deriv_step(&self, kappa: f64) -> f64 {
        match self {
            Basis::Oscillator(p) => 1e-5 * (kappa * p.rho).max(1.0) / p.rho,
            Basis::Laguerre(_) => 1e-5 * kappa.max(1.0),
        }
    }

    /// Largest momentum at which the free solutions can be evaluated.
    pub fn k_limit(&self) -> f64 {
        match self {
            Basis::Oscillator(p) => oscillator::Q_LIMIT / p.rho,
            Basis::Laguerre(cb) => 1e4 * cb.params.bscale,
        }
    }
}

/// Symmetric tridiagonal Hamiltonian in the first N functions of a basis.
#[derive(Debug, Clone)]
pub struct JacobiHamiltonian {
    pub a: Vec<f64>,
    /// b[i] couples rows i and i+1.
    pub b: Vec<f64>,
    pub basis: Basis,
}

impl JacobiHamiltonian {
    pub fn new(a: Vec<f64>, b: Vec<f64>, basis: Basis) -> Result<Self, ForwardError> {
        if a.is_empty() || b.len() + 1 != a.len() {
            return Err(ForwardError::Invalid(format!(
                "need N diagonal and N−1 off-diagonal entries, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(ForwardError::Invalid("non-finite entry".into()));
        }
        if let Some(i) = b.iter().position(|&x| x == 0.0) {
            return Err(ForwardError::Invalid(format!("off-diagonal {i} vanishes")));
        }
        if let Basis::Laguerre(cb) = &basis {
            if cb.n != a.len() {
                return Err(ForwardError::Invalid(format!(
                    "combined basis has order {} but the matrix has {}",
                    cb.n,
                    a.len()
                )));
            }
        }
        if let Basis::Oscillator(_) = &basis {
            if a.len() >= oscillator::N_LIMIT {
                return Err(ForwardError::Invalid(format!("order {} too large", a.len())));
            }
        }
        Ok(JacobiHamiltonian { a, b, basis })
    }

    /// The truncated free Hamiltonian of the same order.
    pub fn free(basis: Basis, n: usize) -> Result<Self, ForwardError> {
        let t = basis.free_block(n);
        let a = (0..n).map(|i| t[(i, i)]).collect();
        let b = (0..n - 1).map(|i| t[(i, i + 1)]).collect();
        JacobiHamiltonian::new(a, b, basis)
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.order();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.a[i]
            } else if i + 1 == j {
                self.b[i]
            } else if j + 1 == i {
                self.b[j]
            } else {
                0.0
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub lambda: Vec<f64>,
    pub zlast: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    /// Physical κ (energy −κ² in Laguerre units, −(κρ)²/2 in oscillator units).
    pub kappa: f64,
    /// Asymptotic normalization constant.
    pub norm_const: f64,
}

fn sorted_eigen(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), ForwardError> {
    let n = m.nrows();
    let eig = m.try_symmetric_eigen(f64::EPSILON, 10_000).ok_or(ForwardError::Convergence)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lambda = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    Ok((lambda, vecs))
}

fn eigenvalues(m: DMatrix<f64>) -> Result<Vec<f64>, ForwardError> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    Ok(sorted_eigen(m)?.0)
}

pub fn eigen_tridiag(h: &JacobiHamiltonian) -> Result<SpectralData, ForwardError> {
    let n = h.order();
    let (lambda, vecs) = sorted_eigen(h.matrix())?;
    let zlast = (0..n).map(|j| vecs[(n - 1, j)].abs()).collect();
    Ok(SpectralData { lambda, zlast })
}

/// The Jacobi matrix (b < 0) with the given eigenvalues and last-row weights,
/// by Lanczos on diag(λ) from the weight vector; the first Lanczos vector
/// is the last basis index.
pub fn spectral_to_jacobi(s: &SpectralData, basis: Basis) -> Result<JacobiHamiltonian, ForwardError> {
    let n = s.lambda.len();
    if n == 0 || s.zlast.len() != n {
        return Err(ForwardError::Invalid("spectral arrays must be non-empty and of equal length".into()));
    }
    if s.lambda.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ForwardError::Invalid("eigenvalues must be strictly ascending".into()));
    }
    if s.zlast.iter().any(|&z| !(z > 0.0)) {
        return Err(ForwardError::Invalid("last-row components must be positive".into()));
    }
    let norm: f64 = s.zlast.iter().map(|z| z * z).sum::<f64>().sqrt();
    let lam = DVector::from_column_slice(&s.lambda);
    let mut q: Vec<DVector<f64>> = vec![DVector::from_iterator(n, s.zlast.iter().map(|z| z / norm))];
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n.saturating_sub(1));
    let scale = s.lambda.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for j in 0..n {
        let mut v = lam.component_mul(&q[j]);
        alpha.push(q[j].dot(&v));
        if j + 1 == n {
            break;
        }
        for _ in 0..2 {
            for qq in &q {
                let c = qq.dot(&v);
                v -= qq * c;
            }
        }
        let bnorm = v.norm();
        if bnorm < 1e-14 * scale {
            return Err(ForwardError::Breakdown { step: j });
        }
        beta.push(bnorm);
        q.push(v / bnorm);
    }
    let a: Vec<f64> = alpha.into_iter().rev().collect();
    let b: Vec<f64> = beta.into_iter().rev().map(|x| -x).collect();
    JacobiHamiltonian::new(a, b, basis)
}

fn pole_check(lambda: &[f64], energy: f64) -> Result<(), ForwardError> {
    let scale = lambda.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for &l in lambda {
        if (energy - l).abs() < 1e-13 * scale {
            return Err(ForwardError::Pole { energy, distance: (energy - l).abs() });
        }
    }
    Ok(())
}

/// Corner element 𝒫_N(E) = [(E − h)⁻¹]_{N−1,N−1} from the spectral sum.
pub fn green_corner(h: &JacobiHamiltonian, energy: f64) -> Result<f64, ForwardError> {
    let s = eigen_tridiag(h)?;
    pole_check(&s.lambda, energy)?;
    Ok(s.lambda.iter().zip(&s.zlast).map(|(l, z)| z * z / (energy - l)).sum())
}

/// The same element as a ratio of characteristic products, with μ the
/// spectrum of the leading (N−1)-block.
pub fn green_corner_ratio(h: &JacobiHamiltonian, energy: f64) -> Result<f64, ForwardError> {
    let n = h.order();
    let lambda = eigenvalues(h.matrix())?;
    pole_check(&lambda, energy)?;
    let mu = eigenvalues(h.matrix().view((0, 0), (n - 1, n - 1)).into_owned())?;
    let mut r = 1.0;
    for j in 0..n {
        r /= energy - lambda[j];
        if j < mu.len() {
            r *= energy - mu[j];
        }
    }
    Ok(r)
}

/// Leading-block spectrum used by the product forms.
pub fn leading_spectrum(h: &JacobiHamiltonian) -> Result<Vec<f64>, ForwardError> {
    let n = h.order();
    eigenvalues(h.matrix().view((0, 0), (n - 1, n - 1)).into_owned())
}

fn corner_solve(m: &DMatrix<f64>, energy: f64) -> Result<DVector<f64>, ForwardError> {
    let n = m.nrows();
    let a = DMatrix::identity(n, n) * energy - m;
    let mut e = DVector::zeros(n);
    e[n - 1] = 1.0;
    a.lu().solve(&e).ok_or(ForwardError::Pole { energy, distance: 0.0 })
}

/// Precomputed pieces for repeated evaluation at many momenta.
struct Model<'a> {
    h: &'a JacobiHamiltonian,
    hm: DMatrix<f64>,
    tm: DMatrix<f64>,
    lambda: Vec<f64>,
    mu: Vec<f64>,
}

impl<'a> Model<'a> {
    fn new(h: &'a JacobiHamiltonian) -> Result<Self, ForwardError> {
        let n = h.order();
        Ok(Model {
            h,
            hm: h.matrix(),
            tm: h.basis.free_block(n),
            lambda: eigenvalues(h.matrix())?,
            mu: leading_spectrum(h)?,
        })
    }

    fn n(&self) -> usize {
        self.h.order()
    }

    /// tan δ in a form that stays accurate when the potential is weak.
    fn tan_delta(&self, k: f64) -> Result<f64, ForwardError> {
        let n = self.n();
        let e = self.h.basis.energy(k);
        pole_check(&self.lambda, e)?;
        let u = corner_solve(&self.hm, e)?;
        let u0 = corner_solve(&self.tm, e)?;
        let dp = u.dot(&((&self.hm - &self.tm) * &u0));
        let p = u[n - 1];
        let tau = self.h.basis.tau(n, e);
        let (_, s_n, c1, c_n) = self.h.basis.tail(n, k)?;
        Ok(dp * tau * s_n / (c1.re - p * tau * c_n.re))
    }

    /// Π(E−λ)·C^(+)_{N−1} − τ·Π(E−μ)·C^(+)_N, pole free in E.
    fn denominator(&self, k: f64) -> Result<Complex64, ForwardError> {
        let n = self.n();
        let e = self.h.basis.energy(k);
        let (_, _, c1, c_n) = self.h.basis.tail(n, k)?;
        let pl: f64 = self.lambda.iter().map(|l| e - l).product();
        let pm: f64 = self.mu.iter().map(|m| e - m).product();
        Ok(c1 * pl - c_n * (self.h.basis.tau(n, e) * pm))
    }

    /// Bound-state form of the denominator (sign = +1) or numerator (−1)
    /// with the common tail factor removed; the factor is returned second.
    fn imag_form(&self, kappa: f64, sign: f64) -> Result<(f64, f64), ForwardError> {
        let n = self.n();
        let e = self.h.basis.energy_imag(kappa);
        let (f1, f_n, factor) = self.h.basis.tail_imag(n, kappa, sign)?;
        let pl: f64 = self.lambda.iter().map(|l| e - l).product();
        let pm: f64 = self.mu.iter().map(|m| e - m).product();
        let tau = self.h.basis.tau(n, e);
        Ok((pl * f1 - tau * pm * f_n, factor))
    }
}

pub fn s_matrix(h: &JacobiHamiltonian, k: f64) -> Result<Complex64, ForwardError> {
    let model = Model::new(h)?;
    let d = model.denominator(k)?;
    if d.norm() == 0.0 {
        return Err(ForwardError::Singular);
    }
    Ok(d.conj() / d)
}

pub fn tan_phase_shift(h: &JacobiHamiltonian, k: f64) -> Result<f64, ForwardError> {
    Model::new(h)?.tan_delta(k)
}

pub fn phase_shift(h: &JacobiHamiltonian, k: f64) -> Result<f64, ForwardError> {
    Ok(phase_shifts(h, &[k])?[0])
}

/// Phase shifts on the branch that vanishes at large momentum and is
/// continuous below it. The branch comes from tracking arg of the pole-free
/// denominator, whose negative equals δ up to a constant; the value itself
/// comes from the accurate tan δ.
type Map = Box<dyn Fn(f64) -> f64>;

pub fn phase_shifts(h: &JacobiHamiltonian, ks: &[f64]) -> Result<Vec<f64>, ForwardError> {
    let model = Model::new(h)?;
    let basis = &h.basis;
    let top = basis.k_limit();
    if let Some(&bad) = ks.iter().find(|&&k| !(k > 0.0) || k > top) {
        return Err(BasisError::Range { what: "k", value: bad, limit: top }.into());
    }
    // march in a variable in which arg D varies gently
    let (to_s, from_s): (Map, Map) = match basis {
        Basis::Oscillator(p) => {
            let rho = p.rho;
            (Box::new(move |k| k * rho), Box::new(move |s| s / rho))
        }
        Basis::Laguerre(cb) => {
            let b = cb.params.bscale;
            (Box::new(move |k: f64| 2.0 * (k / b).atan()), Box::new(move |z: f64| b * (0.5 * z).tan()))
        }
    };
    let step = match basis {
        Basis::Oscillator(_) => 0.02,
        Basis::Laguerre(_) => std::f64::consts::PI / 4000.0,
    };
    let arg_at = |k: f64| -> Result<f64, ForwardError> { Ok(model.denominator(k)?.arg()) };

    let mut order: Vec<usize> = (0..ks.len()).collect();
    order.sort_by(|&i, &j| ks[j].total_cmp(&ks[i]));
    let mut out = vec![0.0; ks.len()];

    let s_top = to_s(top);
    let delta_top = model.tan_delta(top)?.atan();
    let mut s_cur = s_top;
    let mut arg_cur = arg_at(top)?;
    let mut unwrapped = 0.0;
    for &i in &order {
        let s_target = to_s(ks[i]);
        while s_cur > s_target {
            let s_next = (s_cur - step).max(s_target);
            let (d, a) = unwrap_segment(&arg_at, &from_s, s_cur, s_next, arg_cur, 0)?;
            unwrapped += d;
            arg_cur = a;
            s_cur = s_next;
        }
        let estimate = delta_top - unwrapped;
        let raw = model.tan_delta(ks[i])?.atan();
        let m = ((estimate - raw) / std::f64::consts::PI).round();
        out[i] = raw + m * std::f64::consts::PI;
    }
    Ok(out)
}

fn wrap(x: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    x - tau * (x / tau).round()
}

/// Change in arg D from s0 to s1, bisecting until each increment is small.
fn unwrap_segment(
    arg_at: &dyn Fn(f64) -> Result<f64, ForwardError>,
    from_s: &dyn Fn(f64) -> f64,
    s0: f64,
    s1: f64,
    arg0: f64,
    depth: u32,
) -> Result<(f64, f64), ForwardError> {
    let arg1 = arg_at(from_s(s1))?;
    let d = wrap(arg1 - arg0);
    if d.abs() < std::f64::consts::FRAC_PI_4 || depth > 30 {
        return Ok((d, arg1));
    }
    let mid = 0.5 * (s0 + s1);
    let (d1, a1) = unwrap_segment(arg_at, from_s, s0, mid, arg0, depth + 1)?;
    let (d2, a2) = unwrap_segment(arg_at, from_s, mid, s1, a1, depth + 1)?;
    Ok((d1 + d2, a2))
}

struct RootTol;

impl Convergency<f64> for RootTol {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }
    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= 4.0 * f64::EPSILON * x1.abs().max(x2.abs())
    }
    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter > 300
    }
}

/// Poles of S on the positive imaginary axis with their normalization
/// constants, from 𝓜² = (−1)^{ℓ+1}·N(iκ)/(dD/dκ) with N, D the pole-free
/// numerator and denominator.
pub fn bound_states(h: &JacobiHamiltonian) -> Result<Vec<BoundState>, ForwardError> {
    let model = Model::new(h)?;
    let basis = &h.basis;
    let v = h.matrix() - basis.free_block(h.order());
    let vmin = eigenvalues(v)?[0];
    if vmin >= 0.0 {
        return Ok(Vec::new());
    }
    // E_bound ≥ λ_min(V) because the kinetic part is non-negative.
    let kappa_max = 1.5 * basis.momentum(-vmin);
    let grid_n = 200;
    let d_at = |kap: f64| -> f64 {
        match model.imag_form(kap, 1.0) {
            Ok((d, _)) => d,
            Err(_) => f64::NAN,
        }
    };
    let mut grid: Vec<f64> = (1..=grid_n).map(|i| kappa_max * i as f64 / grid_n as f64).collect();
    if let Basis::Laguerre(cb) = basis {
        // step around κ = b, where the tail factor is singular
        let b = cb.params.bscale;
        for g in grid.iter_mut() {
            if (*g - b).abs() < 1e-9 * b {
                *g = b * (1.0 + 1e-6);
            }
        }
    }
    let vals: Vec<f64> = grid.iter().map(|&g| d_at(g)).collect();
    let mut out = Vec::new();
    for i in 0..grid.len() - 1 {
        let (y0, y1) = (vals[i], vals[i + 1]);
        if !(y0.is_finite() && y1.is_finite()) || y0.signum() == y1.signum() {
            continue;
        }
        let mut root = find_root_brent(grid[i], grid[i + 1], d_at, &mut RootTol)
            .map_err(|_| ForwardError::RootRejected { kappa: grid[i], residual: f64::NAN })?;
        let f = |x: f64| model.imag_form(x, 1.0).map(|r| r.0);
        let deriv_at = |x: f64| -> Result<f64, ForwardError> {
            let step = basis.deriv_step(x);
            Ok((f(x - 2.0 * step)? - 8.0 * f(x - step)? + 8.0 * f(x + step)? - f(x + 2.0 * step)?) / (12.0 * step))
        };
        // Brent hands back the last bracket end; polish by Newton
        let mut deriv = deriv_at(root)?;
        for _ in 0..2 {
            let next = root - f(root)? / deriv;
            if next > grid[i] && next < grid[i + 1] {
                root = next;
            }
        }
        deriv = deriv_at(root)?;
        let (d, factor_p) = model.imag_form(root, 1.0)?;
        // residual as the root displacement it implies; the two terms of D can
        // both be tiny at the root, which makes a term-relative test meaningless
        let residual = (d / (deriv * root)).abs();
        if !(residual <= 1e-10) {
            return Err(ForwardError::RootRejected { kappa: root, residual });
        }
        let (num, factor_m) = model.imag_form(root, -1.0)?;
        let parity = if basis.ell().is_multiple_of(2) { -1.0 } else { 1.0 };
        let m2 = parity * num * factor_m / (deriv * factor_p);
        if !(m2 > 0.0) {
            return Err(ForwardError::RootRejected { kappa: root, residual: m2 });
        }
        out.push(BoundState { kappa: root, norm_const: m2.sqrt() });
    }
    Ok(out)
}

/// Solve the interior rows together with the free tail for S and the
/// expansion coefficients c_0..c_{N−1}.
pub fn scattering_solve(h: &JacobiHamiltonian, k: f64) -> Result<(Complex64, Vec<Complex64>), ForwardError> {
    let n = h.order();
    let basis = &h.basis;
    let e = basis.energy(k);
    let (_, _, c1, c_n) = basis.tail(n, k)?;
    let (cm1, cm_n) = (c1.conj(), c_n.conj());
    let half_i = Complex64::new(0.0, 0.5);
    // unknowns c_0..c_{N−1}, S; f_n = (i/2)(C⁻_n − S·C⁺_n)
    let dim = n + 1;
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    let mut rhs = DVector::<Complex64>::zeros(dim);
    let hm = h.matrix();
    for r in 0..n {
        for c in r.saturating_sub(1)..(r + 2).min(n) {
            a[(r, c)] = Complex64::new(hm[(r, c)], 0.0);
        }
        a[(r, r)] -= e;
    }
    let g = basis.row_coupling(n, e);
    // row N−1: … + g·f_N = 0 with f_N linear in S
    a[(n - 1, n)] = -half_i * c_n * g;
    rhs[n - 1] = -half_i * cm_n * g;
    // matching: c_{N−1} = w·f_{N−1}
    let w = basis.last_weight();
    a[(n, n - 1)] = Complex64::new(1.0, 0.0);
    a[(n, n)] = half_i * c1 * w;
    rhs[n] = half_i * cm1 * w;
    let sol = a.lu().solve(&rhs).ok_or(ForwardError::Singular)?;
    Ok((sol[n], sol.iter().take(n).copied().collect()))
}

/// V = h − T in the basis of the Hamiltonian.
pub fn potential_matrix(h: &JacobiHamiltonian) -> DMatrix<f64> {
    h.matrix() - h.basis.free_block(h.order())
}

/// V(r, r′) rendered with the basis functions (the rotated orthonormal set
/// for Laguerre, equivalent to the bi-orthogonal expansion).
pub fn potential_kernel(h: &JacobiHamiltonian, r: f64, rp: f64) -> f64 {
    let v = potential_matrix(h);
    let n = h.order();
    let funcs = |x: f64| -> Vec<f64> {
        match &h.basis {
            Basis::Oscillator(p) => (0..n).map(|i| oscillator::basis_fn(i, p, x)).collect(),
            Basis::Laguerre(cb) => (0..n).map(|i| cb.chi_fn(i, x)).collect(),
        }
    };
    let (f, g) = (funcs(r), funcs(rp));
    let mut sum = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..(i + 2).min(n) {
            sum += f[i] * v[(i, j)] * g[j];
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn osc(ell: u32, rho: f64) -> Basis {
        Basis::Oscillator(OscParams::new(ell, rho).unwrap())
    }

    #[test]
    fn order_one_and_two_examples() {
        let h = JacobiHamiltonian::new(vec![3.0], vec![], osc(0, 1.0)).unwrap();
        let s = eigen_tridiag(&h).unwrap();
        assert_eq!(s.lambda, vec![3.0]);
        assert_eq!(s.zlast, vec![1.0]);
        assert!((green_corner(&h, 1.0).unwrap() + 0.5).abs() < 1e-15);

        let h = JacobiHamiltonian::new(vec![0.0, 0.0], vec![-1.0], osc(0, 1.0)).unwrap();
        let s = eigen_tridiag(&h).unwrap();
        assert!((s.lambda[0] + 1.0).abs() < 1e-14 && (s.lambda[1] - 1.0).abs() < 1e-14);
        for z in &s.zlast {
            assert!((z - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        }
        let back = spectral_to_jacobi(&s, osc(0, 1.0)).unwrap();
        assert!(back.a.iter().all(|x| x.abs() < 1e-14));
        assert!((back.b[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_level_spectral_inverse() {
        let s = SpectralData { lambda: vec![5.0], zlast: vec![1.0] };
        let h = spectral_to_jacobi(&s, osc(0, 1.0)).unwrap();
        assert_eq!(h.a, vec![5.0]);
    }

    #[test]
    fn free_hamiltonian_has_zero_phase_and_unit_s() {
        let h = JacobiHamiltonian::free(osc(1, 0.6), 6).unwrap();
        for &k in &[0.3, 2.0, 9.0] {
            assert!(tan_phase_shift(&h, k).unwrap().abs() < 1e-14);
            assert!((s_matrix(&h, k).unwrap() - 1.0).norm() < 1e-10);
            let (s, c) = scattering_solve(&h, k).unwrap();
            assert!((s - 1.0).norm() < 1e-9);
            let p = OscParams::new(1, 0.6).unwrap();
            for (n, cn) in c.iter().enumerate() {
                let want = oscillator::sine(n, &p, k * 0.6).unwrap();
                assert!((cn - want).norm() < 1e-9 * want.abs().max(1e-3), "n={n}");
            }
        }
        assert!(bound_states(&h).unwrap().is_empty());
    }

    #[test]
    fn laguerre_free_block_gives_unit_s() {
        let cb = CombinedBasis::new(laguerre::LagParams::new(0, 1.0).unwrap(), 5).unwrap();
        let h = JacobiHamiltonian::free(Basis::Laguerre(cb), 5).unwrap();
        for &k in &[0.2, 1.7, 12.0] {
            let (s, _) = scattering_solve(&h, k).unwrap();
            assert!((s - 1.0).norm() < 1e-9, "k={k}: {s}");
            assert!(tan_phase_shift(&h, k).unwrap().abs() < 1e-12);
        }
    }

    fn sample_h(basis: Basis) -> JacobiHamiltonian {
        let n = 5;
        let mut h = JacobiHamiltonian::free(basis, n).unwrap();
        h.a[0] -= 1.3;
        h.a[1] += 0.4;
        h.b[0] *= 1.1;
        h.a[2] -= 0.2;
        h
    }

    #[test]
    fn solvers_agree() {
        let h = sample_h(osc(0, 0.5));
        let ks = [0.5, 1.5, 4.0, 9.0, 15.0];
        let deltas = phase_shifts(&h, &ks).unwrap();
        for (&k, &d) in ks.iter().zip(&deltas) {
            let s = s_matrix(&h, k).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-10);
            assert!((s - Complex64::from_polar(1.0, 2.0 * d)).norm() < 1e-10, "k={k}");
            let (s2, _) = scattering_solve(&h, k).unwrap();
            assert!((s2 - s).norm() < 1e-9);
        }
    }

    #[test]
    fn levinson_branch() {
        let h = sample_h(osc(0, 0.5));
        let nb = bound_states(&h).unwrap().len();
        let d0 = phase_shift(&h, 1e-3).unwrap();
        assert!((d0 - nb as f64 * std::f64::consts::PI).abs() < 0.05, "{d0} with {nb} bound states");
        let cb = CombinedBasis::new(laguerre::LagParams::new(0, 1.0).unwrap(), 5).unwrap();
        let h = sample_h(Basis::Laguerre(cb));
        let nb = bound_states(&h).unwrap().len();
        let d0 = phase_shift(&h, 1e-3).unwrap();
        assert!((d0 - nb as f64 * std::f64::consts::PI).abs() < 0.05, "{d0} with {nb} bound states");
    }

    #[test]
    fn corner_forms_agree() {
        let h = sample_h(osc(0, 1.0));
        for &e in &[-3.0, 0.1, 2.3, 7.7] {
            let g1 = green_corner(&h, e).unwrap();
            let g2 = green_corner_ratio(&h, e).unwrap();
            let full = (DMatrix::identity(5, 5) * e - h.matrix()).try_inverse().unwrap()[(4, 4)];
            assert!(((g1 - g2) / g1).abs() < 1e-10 && ((g1 - full) / full).abs() < 1e-10);
        }
    }

    #[test]
    fn pole_is_reported() {
        let h = JacobiHamiltonian::new(vec![3.0], vec![], osc(0, 1.0)).unwrap();
        assert!(matches!(green_corner(&h, 3.0), Err(ForwardError::Pole { .. })));
    }

    #[test]
    fn bound_state_lies_below_truncated_spectrum() {
        let h = sample_h(osc(0, 0.5));
        let bs = bound_states(&h).unwrap();
        assert_eq!(bs.len(), 1);
        let b = bs[0];
        let e = h.basis.energy_imag(b.kappa);
        let s = eigen_tridiag(&h).unwrap();
        // the truncated block is a variational upper bound
        assert!(e < s.lambda[0]);
        assert!(b.norm_const > 0.0);
    }

    #[test]
    fn potential_matrix_and_kernel() {
        let h = JacobiHamiltonian::free(osc(0, 1.0), 4).unwrap();
        assert!(potential_matrix(&h).norm() == 0.0);
        let h = sample_h(osc(0, 1.0));
        let v = potential_matrix(&h);
        assert!((&v - v.transpose()).norm() == 0.0);
        let (x, y) = (0.7, 1.9);
        assert!((potential_kernel(&h, x, y) - potential_kernel(&h, y, x)).abs() < 1e-14);
    }
}
