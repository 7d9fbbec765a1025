//! Inversion of phase-shift and bound-state data to a Jacobi Hamiltonian
//! through the discrete Marchenko-type kernel equations.
//!
//! The pipeline: taper the phase beyond the data, tabulate the real
//! "distorted" free solutions g_n = S_n cos δ + C_n sin δ on quadrature nodes,
//! form the Gram matrix Q of the completeness relation, solve the triangular
//! kernel rows window by window, and read a_n, b_n off the kernel.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{InputError, InverseError, Stage};
use crate::forward::{self, Basis, BoundState, JacobiHamiltonian};
use crate::interp::Pchip;
use crate::laguerre::{self, CombinedBasis};
use crate::oscillator::{self, OscParams};
use crate::quadrature::{adaptive_nodes, NodeSet, Rule};

/// Tabulated phase shift on [0, k0] plus bound-state data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringInput {
    pub ell: u32,
    /// (k, δ) pairs, k ascending.
    pub samples: Vec<(f64, f64)>,
    pub bound_states: Vec<BoundState>,
    pub k0: f64,
}

impl ScatteringInput {
    pub fn new(ell: u32, samples: Vec<(f64, f64)>, bound_states: Vec<BoundState>) -> Result<Self, InputError> {
        if samples.len() < 2 {
            return Err(InputError::Invalid(format!("need at least two samples, got {}", samples.len())));
        }
        if samples.iter().any(|(k, d)| !k.is_finite() || !d.is_finite() || *k < 0.0) {
            return Err(InputError::Invalid("samples must be finite with k ≥ 0".into()));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(InputError::Invalid(format!("k not strictly ascending at sample {}", i + 1)));
            }
            if (w[1].1 - w[0].1).abs() > 0.5 * PI {
                return Err(InputError::Invalid(format!("phase jumps by more than π/2 at sample {}", i + 1)));
            }
        }
        if bound_states.iter().any(|b| !(b.kappa > 0.0) || !(b.norm_const > 0.0)) {
            return Err(InputError::Invalid("bound states need κ > 0 and 𝓜 > 0".into()));
        }
        let k0 = samples[samples.len() - 1].0;
        Ok(ScatteringInput { ell, samples, bound_states, k0 })
    }

    pub fn ks(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaperMode {
    /// δ(q0)·(q/q0)^{4N+2ℓ−3}·e^{−(q²−q0²)}, q = kρ.
    Oscillator,
    /// δ(k0)·e^{−(k−k0)²/w²}.
    LaguerreGaussian,
    /// δ(k0)·(k0/k)^{2N+2ℓ−1}, the decay of a rank-N phase in this basis.
    LaguerrePower,
}

/// Continuation of the phase beyond the data, in the basis variable
/// (q = kρ for the oscillator, k for Laguerre).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaperSpec {
    pub q0: f64,
    pub exponent_n: usize,
    pub mode: TaperMode,
    pub blend_width: f64,
}

impl TaperSpec {
    /// Default taper for a basis: the oscillator envelope or the Laguerre
    /// power law, with the blend width given in momentum units.
    pub fn for_basis(basis: &Basis, k0: f64, n: usize, width_k: f64) -> Self {
        match basis {
            Basis::Oscillator(p) => {
                TaperSpec { q0: k0 * p.rho, exponent_n: n, mode: TaperMode::Oscillator, blend_width: width_k * p.rho }
            }
            Basis::Laguerre(_) => {
                TaperSpec { q0: k0, exponent_n: n, mode: TaperMode::LaguerrePower, blend_width: width_k }
            }
        }
    }
}

/// Interpolated data joined smoothly to the taper; evaluated at physical k.
#[derive(Debug, Clone)]
pub struct TaperedPhase {
    data: Pchip,
    spec: TaperSpec,
    /// q per unit k
    unit: f64,
    ell: u32,
    delta_q0: f64,
}

impl TaperedPhase {
    pub fn new(input: &ScatteringInput, spec: &TaperSpec, basis: &Basis) -> Result<Self, InverseError> {
        let unit = match basis {
            Basis::Oscillator(p) => p.rho,
            Basis::Laguerre(_) => 1.0,
        };
        if !(spec.blend_width > 0.0) || !(spec.blend_width < spec.q0) {
            return Err(InverseError::at(
                Stage::Taper,
                format!("blend width {} must lie in (0, q0 = {})", spec.blend_width, spec.q0),
            ));
        }
        if ((input.k0 * unit - spec.q0) / spec.q0).abs() > 1e-12 {
            return Err(InverseError::at(Stage::Taper, "taper q0 does not match the data end point"));
        }
        let (x, y): (Vec<f64>, Vec<f64>) = input.samples.iter().map(|&(k, d)| (k * unit, d)).unzip();
        let data = Pchip::new(&x, &y).map_err(|e| InverseError::at(Stage::Taper, e))?;
        let delta_q0 = data.eval(spec.q0);
        Ok(TaperedPhase { data, spec: *spec, unit, ell: input.ell, delta_q0 })
    }

    fn exponent(&self) -> i32 {
        let (n, l) = (self.spec.exponent_n as i32, self.ell as i32);
        match self.spec.mode {
            TaperMode::Oscillator => 4 * n + 2 * l - 3,
            TaperMode::LaguerreGaussian => 0,
            TaperMode::LaguerrePower => 2 * n + 2 * l - 1,
        }
    }

    fn far(&self, q: f64) -> f64 {
        let q0 = self.spec.q0;
        match self.spec.mode {
            TaperMode::Oscillator => self.delta_q0 * (q / q0).powi(self.exponent()) * (-(q * q - q0 * q0)).exp(),
            TaperMode::LaguerreGaussian => self.delta_q0 * (-((q - q0) / self.spec.blend_width).powi(2)).exp(),
            TaperMode::LaguerrePower => self.delta_q0 * (q0 / q).powi(self.exponent()),
        }
    }

    pub fn eval_q(&self, q: f64) -> f64 {
        let (q0, w) = (self.spec.q0, self.spec.blend_width);
        if q <= q0 - w {
            return self.data.eval(q);
        }
        if q >= q0 {
            return self.far(q);
        }
        let x = (q - q0 + w) / w;
        let s = x * x * (3.0 - 2.0 * x);
        (1.0 - s) * self.data.eval(q) + s * self.far(q)
    }

    /// δ_mod at physical momentum k.
    pub fn eval(&self, k: f64) -> f64 {
        self.eval_q(k * self.unit)
    }

    /// Physical momentum beyond which |δ_mod|·k^ℓ stays below `eps`.
    pub fn cutoff(&self, eps: f64) -> f64 {
        let q0 = self.spec.q0;
        if self.delta_q0 == 0.0 {
            return q0 / self.unit;
        }
        let mut q = q0;
        let step = 0.05 * q0.max(1.0);
        for _ in 0..1_000_000 {
            let growth = if self.spec.mode == TaperMode::Oscillator { 1.0 } else { q.powi(self.ell as i32) };
            if self.far(q).abs() * growth < eps {
                break;
            }
            q += step;
        }
        q / self.unit
    }
}

/// Gauss–Legendre settings. `points` per panel; panels are split until the
/// halving test moves each panel by less than `rel_tol` of the total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub points: usize,
    pub initial_panels: usize,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { points: 32, initial_panels: 32, rel_tol: 1e-12, max_panels: 8192 }
    }
}

/// Tables on quadrature nodes (physical k, weights in dk) and at bound states.
#[derive(Debug, Clone)]
pub struct FTable {
    pub nodes: NodeSet,
    /// g[(n, i)]
    pub g: DMatrix<f64>,
    /// Partner used on the right of the Gram products; equals g except in the
    /// Laguerre row N−1, which picks up the overlap with the tail.
    pub g_dual: DMatrix<f64>,
    /// Free tables subtracted against the exact free completeness, if used.
    pub free: Option<(DMatrix<f64>, DMatrix<f64>)>,
    /// bound[(n, ν)] = 𝓜_ν·i^ℓ C^(+)_n(iκ_ν)
    pub bound: DMatrix<f64>,
    pub bound_dual: DMatrix<f64>,
}

/// Real free solutions (S_n, C_n) for the rows used by the inversion, and the
/// plain index-N pair for the Laguerre dual row.
struct Rows {
    s: Vec<f64>,
    c: Vec<f64>,
    tail: Option<(f64, f64)>,
}

fn free_rows(basis: &Basis, n_rows: usize, k: f64) -> Result<Rows, InverseError> {
    let fail = |e: crate::error::BasisError| InverseError::at(Stage::FTable, format!("at k = {k}: {e}"));
    match basis {
        Basis::Oscillator(p) => {
            let q = k * p.rho;
            let s = oscillator::sine_table(n_rows - 1, p, q).map_err(fail)?;
            let c = oscillator::cosine_table(n_rows - 1, p, q).map_err(fail)?;
            Ok(Rows { s, c, tail: None })
        }
        Basis::Laguerre(cb) => {
            let m = laguerre::modified_free_solutions(cb, k).map_err(fail)?;
            let lp = &cb.params;
            let tail_s = laguerre::lag_sine(cb.n, lp, k).map_err(fail)?;
            let tail_c = laguerre::lag_cpm(cb.n, lp, k, 1.0).map_err(fail)?.re;
            Ok(Rows { s: m.s, c: m.cplus.iter().map(|c| c.re).collect(), tail: Some((tail_s, tail_c)) })
        }
    }
}

fn table_rows(basis: &Basis) -> usize {
    match basis {
        Basis::Oscillator(_) => 0,
        Basis::Laguerre(cb) => cb.n,
    }
}

/// (g, g̃, S, S̃) at one momentum.
type GRows = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

fn g_at(basis: &Basis, n_rows: usize, k: f64, delta: f64) -> Result<GRows, InverseError> {
    let r = free_rows(basis, n_rows, k)?;
    let (cs, sn) = (delta.cos(), delta.sin());
    let g: Vec<f64> = r.s.iter().zip(&r.c).map(|(s, c)| s * cs + c * sn).collect();
    let mut gd = g.clone();
    let mut sd = r.s.clone();
    if let (Basis::Laguerre(cb), Some((ts, tc))) = (basis, r.tail) {
        let last = cb.n - 1;
        let w = cb.tail_overlap();
        gd[last] += w * (ts * cs + tc * sn);
        sd[last] += w * ts;
    }
    Ok((g, gd, r.s, sd))
}

/// Tabulate g_n, n < n_rows, on the nodes, plus the bound-state columns.
pub fn f_table(
    basis: &Basis,
    phase: &TaperedPhase,
    bound: &[BoundState],
    n_rows: usize,
    nodes: NodeSet,
) -> Result<FTable, InverseError> {
    let laguerre = matches!(basis, Basis::Laguerre(_));
    if laguerre && n_rows != table_rows(basis) {
        return Err(InverseError::at(Stage::FTable, "Laguerre tables cover exactly the combined block"));
    }
    let m = nodes.len();
    let mut g = DMatrix::zeros(n_rows, m);
    let mut gd = DMatrix::zeros(n_rows, m);
    let mut s = DMatrix::zeros(n_rows, m);
    let mut sd = DMatrix::zeros(n_rows, m);
    for (i, &k) in nodes.x.iter().enumerate() {
        let (gi, gdi, si, sdi) = g_at(basis, n_rows, k, phase.eval(k))?;
        for n in 0..n_rows {
            g[(n, i)] = gi[n];
            gd[(n, i)] = gdi[n];
            s[(n, i)] = si[n];
            sd[(n, i)] = sdi[n];
        }
    }
    let nb = bound.len();
    let mut bt = DMatrix::zeros(n_rows, nb);
    let mut btd = DMatrix::zeros(n_rows, nb);
    for (j, b) in bound.iter().enumerate() {
        let fail =
            |e: crate::error::BasisError| InverseError::at(Stage::FTable, format!("bound state κ = {}: {e}", b.kappa));
        match basis {
            Basis::Oscillator(p) => {
                for n in 0..n_rows {
                    let v = b.norm_const * oscillator::cpm_imag_axis(n, p, b.kappa * p.rho, 1.0).map_err(fail)?;
                    bt[(n, j)] = v;
                    btd[(n, j)] = v;
                }
            }
            Basis::Laguerre(cb) => {
                let col = laguerre::modified_cpm_imag_axis(cb, b.kappa, 1.0).map_err(fail)?;
                for n in 0..n_rows {
                    bt[(n, j)] = b.norm_const * col[n];
                    btd[(n, j)] = b.norm_const * col[n];
                }
                let tail = laguerre::lag_cpm_imag_axis(cb.n, &cb.params, b.kappa, 1.0).map_err(fail)?;
                btd[(n_rows - 1, j)] += cb.tail_overlap() * b.norm_const * tail;
            }
        }
    }
    let free = if laguerre { Some((s, sd)) } else { None };
    Ok(FTable { nodes, g, g_dual: gd, free, bound: bt, bound_dual: btd })
}

#[derive(Debug, Clone)]
pub struct QMatrix {
    pub q: DMatrix<f64>,
    pub quadrature_error: f64,
}

/// Q_{n,m} = (2/π)∫ g_n g̃_m dk + Σ_ν f_n(iκ_ν) f̃_m(iκ_ν). When free tables
/// are present the integral is taken against the exact free completeness,
/// so only g g̃ − S S̃ is integrated.
pub fn q_matrix(ft: &FTable) -> QMatrix {
    let gram = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
        let mut bw = b.clone();
        for (mut col, w) in bw.column_iter_mut().zip(&ft.nodes.w) {
            col *= *w;
        }
        (a * bw.transpose()) * (2.0 / PI)
    };
    let mut q = gram(&ft.g, &ft.g_dual);
    if let Some((s, sd)) = &ft.free {
        q -= gram(s, sd);
        q += DMatrix::identity(q.nrows(), q.ncols());
    }
    q += &ft.bound * ft.bound_dual.transpose();
    QMatrix { q, quadrature_error: ft.nodes.error_estimate }
}

/// Triangular kernel; row n holds K_{n,m} for m = n..=window_end[n].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub k: DMatrix<f64>,
    pub window_end: Vec<usize>,
    /// |K_nn·Σ_m K_nm Q_mn − 1| per row
    pub residual: Vec<f64>,
}

impl KernelMatrix {
    pub fn rows(&self) -> usize {
        self.window_end.len()
    }

    pub fn get(&self, n: usize, m: usize) -> f64 {
        if n < self.rows() && m < self.k.ncols() {
            self.k[(n, m)]
        } else {
            0.0
        }
    }
}

/// Solve each row on its own square window: Σ_m K_nm Q_mp = 0 for p in
/// n+1..=end, then K_nn² (Q_nn + Σ r_m Q_mn) = 1 with K_nn > 0.
pub fn solve_kernel(q: &QMatrix, window_end: &[usize]) -> Result<KernelMatrix, InverseError> {
    solve_windows(q, window_end, 0)
}

/// As `solve_kernel`, but the first `refit` rows take |bracket|: their band
/// entries are replaced afterwards, so only their shape is used.
fn solve_windows(q: &QMatrix, window_end: &[usize], refit: usize) -> Result<KernelMatrix, InverseError> {
    let dim = q.q.nrows();
    let rows = window_end.len();
    let mut k = DMatrix::zeros(rows, dim);
    let mut residual = vec![0.0; rows];
    for (n, &end) in window_end.iter().enumerate() {
        if end >= dim || end + 1 < n {
            return Err(InverseError::at(Stage::Kernel, format!("window {n}..={end} outside Q of order {dim}")));
        }
        let idx: Vec<usize> = (n + 1..=end).collect();
        let r = if idx.is_empty() {
            DVector::zeros(0)
        } else {
            let a = DMatrix::from_fn(idx.len(), idx.len(), |i, j| q.q[(idx[j], idx[i])]);
            let rhs = DVector::from_fn(idx.len(), |i, _| -q.q[(n, idx[i])]);
            a.lu().solve(&rhs).ok_or(InverseError::SingularWindow { row: n })?
        };
        let mut bracket = q.q[(n, n)] + idx.iter().enumerate().map(|(i, &m)| r[i] * q.q[(m, n)]).sum::<f64>();
        if n < refit {
            bracket = bracket.abs();
        }
        if !(bracket > 0.0) {
            return Err(InverseError::NonPositive { row: n, value: bracket });
        }
        let knn = 1.0 / bracket.sqrt();
        k[(n, n)] = knn;
        for (i, &m) in idx.iter().enumerate() {
            k[(n, m)] = r[i] * knn;
        }
        let check: f64 = (n..=end).map(|m| k[(n, m)] * q.q[(m, n)]).sum();
        let norm = if n < refit { (knn * check).abs() } else { knn * check };
        residual[n] = (norm - 1.0).abs();
    }
    Ok(KernelMatrix { k, window_end: window_end.to_vec(), residual })
}

/// a_n, b_n for n ≥ 1 from the kernel, with the free block T:
/// b_{n−1,n} = (K_nn/K_{n−1,n−1})·T_{n,n−1},
/// a_n = T_nn + (K_{n,n+1}/K_nn)·T_{n+1,n} − (K_{n−1,n}/K_{n−1,n−1})·T_{n,n−1}.
/// Rows past the kernel are taken as the identity.
fn band_from_kernel(kern: &KernelMatrix, t: impl Fn(usize, usize) -> f64, upto: usize, a: &mut [f64], b: &mut [f64]) {
    let kk = |n: usize, m: usize| {
        if n < kern.rows() {
            kern.get(n, m)
        } else if n == m {
            1.0
        } else {
            0.0
        }
    };
    for n in 1..=upto {
        b[n - 1] = kk(n, n) / kk(n - 1, n - 1) * t(n, n - 1);
        a[n] = t(n, n) + kk(n, n + 1) / kk(n, n) * t(n + 1, n) - kk(n - 1, n) / kk(n - 1, n - 1) * t(n, n - 1);
    }
}

/// c_n(k) = Σ_m K_nm g_m(k) for every row of the kernel at the given table columns.
fn kernel_apply(kern: &KernelMatrix, g: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = kern.k.ncols().min(g.nrows());
    kern.k.columns(0, cols) * g.rows(0, cols)
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// max over the data k of |δ_forward − δ_mod| modulo π
    pub roundtrip_max_dev: f64,
    pub roundtrip_at: f64,
    pub kernel_residual_max: f64,
    /// relative spread of E − b_1 c_1/c_0 over ten nodes inside the data
    pub a0_spread: f64,
    pub quadrature_error: f64,
    pub nodes: usize,
    pub input_bound_states: Vec<BoundState>,
    pub forward_bound_states: Vec<BoundState>,
}

impl Diagnostics {
    /// True when the reconstructed Hamiltonian misses the input bound states
    /// (count, or κ beyond 1e−6 relative).
    pub fn bound_state_mismatch(&self) -> bool {
        self.input_bound_states.len() != self.forward_bound_states.len()
            || self
                .input_bound_states
                .iter()
                .zip(&self.forward_bound_states)
                .any(|(a, b)| ((a.kappa - b.kappa) / a.kappa).abs() > 1e-6)
    }
}

#[derive(Debug, Clone)]
pub struct Inversion {
    pub hamiltonian: JacobiHamiltonian,
    pub kernel: KernelMatrix,
    pub q: QMatrix,
    pub table: FTable,
    pub diagnostics: Diagnostics,
}

fn oscillator_nodes(
    p: &OscParams,
    phase: &TaperedPhase,
    n_rows: usize,
    quad: &QuadratureSpec,
) -> Result<NodeSet, InverseError> {
    let trace = |k: f64| -> f64 {
        match g_at(&Basis::Oscillator(*p), n_rows, k, phase.eval(k)) {
            Ok((g, ..)) => g.iter().map(|v| v * v).sum(),
            Err(_) => f64::NAN,
        }
    };
    // the integrand dies like e^{-q²}; stop once it is negligible
    let q_top = oscillator::Q_LIMIT;
    let mut q_max = phase.spec.q0 + 1.0;
    let peak = (1..=40).map(|i| trace(i as f64 * q_max / 40.0 / p.rho)).fold(0.0, f64::max);
    while q_max < q_top && trace(q_max / p.rho) > 1e-17 * peak {
        q_max = (q_max + 0.25).min(q_top);
    }
    let rule = Rule::new(quad.points);
    let ns = adaptive_nodes(trace, 0.0, q_max / p.rho, &rule, quad.initial_panels, quad.rel_tol, quad.max_panels)?;
    if ns.x.iter().any(|&k| trace(k).is_nan()) {
        return Err(InverseError::at(Stage::Quadrature, "free solutions failed on a node"));
    }
    Ok(ns)
}

/// Nodes in ζ = 2 atan(k/b), mapped back to k with dk = b/(2cos²(ζ/2)) dζ.
fn laguerre_nodes(cb: &CombinedBasis, phase: &TaperedPhase, quad: &QuadratureSpec) -> Result<NodeSet, InverseError> {
    let b = cb.params.bscale;
    let basis = Basis::Laguerre(cb.clone());
    let k_of = |z: f64| b * (0.5 * z).tan();
    let jac = |z: f64| 0.5 * b / (0.5 * z).cos().powi(2);
    let k_cut = phase.cutoff(1e-17).min(1e4 * b);
    let z_cut = 2.0 * (k_cut / b).atan();
    let n = cb.n;
    let integrand = |z: f64| -> f64 {
        let k = k_of(z);
        match g_at(&basis, n, k, phase.eval(k)) {
            Ok((g, gd, s, sd)) => {
                (0..n).map(|i| (g[i] * gd[i] - s[i] * sd[i]).abs() + (g[i] - s[i]).abs() * s[i].abs()).sum::<f64>()
                    * jac(z)
            }
            Err(_) => f64::NAN,
        }
    };
    let rule = Rule::new(quad.points);
    let zs = adaptive_nodes(integrand, 0.0, z_cut, &rule, quad.initial_panels, quad.rel_tol, quad.max_panels)?;
    Ok(NodeSet {
        x: zs.x.iter().map(|&z| k_of(z)).collect(),
        w: zs.x.iter().zip(&zs.w).map(|(&z, &w)| w * jac(z)).collect(),
        error_estimate: zs.error_estimate,
        panels: zs.panels,
    })
}

fn wrap_pi(x: f64) -> f64 {
    x - PI * (x / PI).round()
}

/// Ten indices spread over nodes with k in (lo, hi).
fn spread_nodes(nodes: &NodeSet, lo: f64, hi: f64) -> Vec<usize> {
    let inside: Vec<usize> = (0..nodes.len()).filter(|&i| nodes.x[i] > lo && nodes.x[i] < hi).collect();
    if inside.is_empty() {
        return inside;
    }
    let step = (inside.len() / 10).max(1);
    inside.iter().step_by(step).take(10).copied().collect()
}

fn relative_spread(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    (hi - lo) / mean.abs().max(f64::MIN_POSITIVE)
}

/// Least-squares fit of (a_0, a_1, b_{0,1}) to the first two rows of the
/// interior equations, given c_1, c_2 and the already recovered b_{1,2}:
/// with X = b_{0,1}² − a_0 a_1,
/// X c_1 + a_0(E c_1 − b_{1,2} c_2) + a_1 E c_1 = E² c_1 − E b_{1,2} c_2.
fn fit_leading(e: &[f64], c1: &[f64], c2: &[f64], b12: f64) -> Option<(f64, f64, f64)> {
    let rows = e.len();
    let a = DMatrix::from_fn(rows, 3, |i, j| match j {
        0 => c1[i],
        1 => e[i] * c1[i] - b12 * c2[i],
        _ => e[i] * c1[i],
    });
    let rhs = DVector::from_fn(rows, |i, _| e[i] * e[i] * c1[i] - e[i] * b12 * c2[i]);
    // column scaling keeps the normal equations tame
    let scale: Vec<f64> = (0..3).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    let a_s = DMatrix::from_fn(rows, 3, |i, j| a[(i, j)] / scale[j]);
    let svd = a_s.svd(true, true);
    let sol = svd.solve(&rhs, 1e-14).ok()?;
    let (x, a0, a1) = (sol[0] / scale[0], sol[1] / scale[1], sol[2] / scale[2]);
    let b2 = x + a0 * a1;
    if !(b2 > 0.0) {
        return None;
    }
    Some((a0, a1, -b2.sqrt()))
}

/// End-to-end inversion at order `n` in the given basis.
pub fn invert(
    input: &ScatteringInput,
    n: usize,
    basis: &Basis,
    taper: &TaperSpec,
    quad: &QuadratureSpec,
) -> Result<Inversion, InverseError> {
    if n == 0 {
        return Err(InverseError::at(Stage::Input, "order must be at least 1"));
    }
    if input.ell != basis.ell() {
        return Err(InverseError::at(Stage::Input, format!("data ℓ = {} but basis ℓ = {}", input.ell, basis.ell())));
    }
    if taper.exponent_n != n {
        return Err(InverseError::at(Stage::Input, "taper exponent must use the inversion order"));
    }
    let phase = TaperedPhase::new(input, taper, basis)?;
    invert_pass(input, n, basis, &phase, quad)
}

fn invert_pass(
    input: &ScatteringInput,
    n: usize,
    basis: &Basis,
    phase: &TaperedPhase,
    quad: &QuadratureSpec,
) -> Result<Inversion, InverseError> {
    match basis {
        Basis::Oscillator(p) => invert_oscillator(input, n, p, phase, quad),
        Basis::Laguerre(cb) => {
            if cb.n != n {
                return Err(InverseError::at(Stage::Input, format!("combined basis has order {} not {n}", cb.n)));
            }
            if n < 4 {
                return Err(InverseError::at(Stage::Input, "Laguerre inversion needs N ≥ 4"));
            }
            invert_laguerre(input, cb, phase, quad)
        }
    }
}

fn invert_oscillator(
    input: &ScatteringInput,
    n: usize,
    p: &OscParams,
    phase: &TaperedPhase,
    quad: &QuadratureSpec,
) -> Result<Inversion, InverseError> {
    let basis = Basis::Oscillator(*p);
    let rows = 2 * n;
    let nodes = oscillator_nodes(p, phase, rows, quad)?;
    let table = f_table(&basis, phase, &input.bound_states, rows, nodes)?;
    let q = q_matrix(&table);
    let ends: Vec<usize> = (0..n).map(|i| 2 * n - i - 1).collect();
    let kern = solve_kernel(&q, &ends)?;

    let t = |i: usize, j: usize| oscillator::kinetic_elem(i, j, p.ell);
    let mut a: Vec<f64> = (0..n).map(|i| t(i, i)).collect();
    let mut b: Vec<f64> = (0..n.saturating_sub(1)).map(|i| t(i, i + 1)).collect();
    band_from_kernel(&kern, t, n - 1, &mut a, &mut b);

    // a_0 as the energy moment of c_0 over the full spectral measure
    let c = kernel_apply(&kern, &table.g);
    let cb = kernel_apply(&kern, &table.bound);
    let e_nodes: Vec<f64> = table.nodes.x.iter().map(|&k| basis.energy(k)).collect();
    let mut a0 =
        (2.0 / PI) * (0..table.nodes.len()).map(|i| table.nodes.w[i] * e_nodes[i] * c[(0, i)].powi(2)).sum::<f64>();
    for (j, bs) in input.bound_states.iter().enumerate() {
        a0 += basis.energy_imag(bs.kappa) * cb[(0, j)].powi(2);
    }
    a[0] = a0;

    let a0_spread = if n >= 2 {
        let k_hi = (taper_lo(phase)).max(0.0);
        let sel = spread_nodes(&table.nodes, 0.1 * input.k0, k_hi);
        let vals: Vec<f64> = sel.iter().map(|&i| e_nodes[i] - b[0] * c[(1, i)] / c[(0, i)]).collect();
        relative_spread(&vals)
    } else {
        0.0
    };
    finish(input, basis, a, b, kern, q, table, phase, a0_spread)
}

/// Upper end of the untouched data, in physical k.
fn taper_lo(phase: &TaperedPhase) -> f64 {
    (phase.spec.q0 - phase.spec.blend_width) / phase.unit
}

fn invert_laguerre(
    input: &ScatteringInput,
    cb: &CombinedBasis,
    phase: &TaperedPhase,
    quad: &QuadratureSpec,
) -> Result<Inversion, InverseError> {
    let n = cb.n;
    let m = cb.m;
    let basis = Basis::Laguerre(cb.clone());
    let nodes = laguerre_nodes(cb, phase, quad)?;
    let table = f_table(&basis, phase, &input.bound_states, n, nodes)?;
    let q = q_matrix(&table);
    let ends: Vec<usize> = (0..m).map(|i| n - i - 1).collect();
    let kern = solve_windows(&q, &ends, 1)?;

    let t = |i: usize, j: usize| cb.t_elem(i, j);
    let mut a: Vec<f64> = (0..n).map(|i| t(i, i)).collect();
    let mut b: Vec<f64> = (0..n - 1).map(|i| t(i, i + 1)).collect();
    band_from_kernel(&kern, t, m, &mut a, &mut b);
    if n % 2 == 1 {
        a[m] = t(m, m);
    }

    // the first rows couple to data at all energies; fit them instead
    let b_scale = cb.params.bscale;
    let hi = taper_lo(phase).min(2.5 * b_scale);
    let lo = 0.2 * b_scale;
    if !(hi > lo) {
        return Err(InverseError::at(Stage::Recover, "data interval too short for the leading-row fit"));
    }
    let fit_k: Vec<f64> = (0..60).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / 60.0).collect();
    let mut gfit = DMatrix::zeros(n, fit_k.len());
    for (i, &k) in fit_k.iter().enumerate() {
        let (g, ..) = g_at(&basis, n, k, phase.eval(k))?;
        for r in 0..n {
            gfit[(r, i)] = g[r];
        }
    }
    let crow = |row: usize, i: usize| -> f64 {
        if row < kern.rows() {
            (row..=kern.window_end[row]).map(|mm| kern.k[(row, mm)] * gfit[(mm, i)]).sum()
        } else {
            gfit[(row, i)]
        }
    };
    let e: Vec<f64> = fit_k.iter().map(|k| k * k).collect();
    let c1: Vec<f64> = (0..fit_k.len()).map(|i| crow(1, i)).collect();
    let c2: Vec<f64> = (0..fit_k.len()).map(|i| crow(2, i)).collect();
    let (a0, a1, b01) = fit_leading(&e, &c1, &c2, b[1])
        .ok_or_else(|| InverseError::at(Stage::Recover, "leading-row fit has no real solution"))?;
    a[0] = a0;
    a[1] = a1;
    b[0] = b01;

    let c0: Vec<f64> = (0..fit_k.len()).map(|i| crow(0, i)).collect();
    let sel: Vec<usize> = (0..fit_k.len()).step_by(6).collect();
    let vals: Vec<f64> = sel.iter().map(|&i| e[i] - b[0] * c1[i] / c0[i]).collect();
    let a0_spread = relative_spread(&vals);
    finish(input, basis, a, b, kern, q, table, phase, a0_spread)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    input: &ScatteringInput,
    basis: Basis,
    a: Vec<f64>,
    b: Vec<f64>,
    kernel: KernelMatrix,
    q: QMatrix,
    table: FTable,
    phase: &TaperedPhase,
    a0_spread: f64,
) -> Result<Inversion, InverseError> {
    let h = JacobiHamiltonian::new(a, b, basis).map_err(|e| InverseError::at(Stage::Recover, e))?;
    let ks: Vec<f64> = input.ks().into_iter().filter(|&k| k > 0.0).collect();
    let fwd = forward::phase_shifts(&h, &ks).map_err(|e| InverseError::at(Stage::RoundTrip, e))?;
    let (mut dev, mut at) = (0.0, 0.0);
    for (k, d) in ks.iter().zip(&fwd) {
        let x = wrap_pi(d - phase.eval(*k)).abs();
        if x > dev {
            dev = x;
            at = *k;
        }
    }
    let forward_bound_states = forward::bound_states(&h).map_err(|e| InverseError::at(Stage::RoundTrip, e))?;
    let diagnostics = Diagnostics {
        roundtrip_max_dev: dev,
        roundtrip_at: at,
        kernel_residual_max: kernel.residual.iter().fold(0.0, |m, &x| m.max(x)),
        a0_spread,
        quadrature_error: q.quadrature_error,
        nodes: table.nodes.len(),
        input_bound_states: input.bound_states.clone(),
        forward_bound_states,
    };
    Ok(Inversion { hamiltonian: h, kernel, q, table, diagnostics })
}
