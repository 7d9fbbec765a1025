//! Attractive square well, s-wave, in units of its radius R.
//!
//! `u0` is the dimensionless depth √(2μV₀/ħ²)·R; momenta are kR, and the
//! normalization constant is returned as 𝓜R^{1/2}.

use std::f64::consts::PI;

use roots::{find_root_brent, SimpleConvergency};

use crate::error::InputError;
use crate::forward::BoundState;
use crate::inverse::ScatteringInput;

/// Phase shift on the branch with δ(∞) = 0, so δ(0⁺) = n_b·π.
pub fn well_phase_shift(kr: f64, u0: f64) -> f64 {
    let kk = (kr * kr + u0 * u0).sqrt();
    let t = kk.tan();
    let raw = if t.is_finite() { (kr / kk * t).atan() } else { 0.0 };
    -kr + raw + PI * (kk / PI + 0.5).floor()
}

pub fn bound_state_count(u0: f64) -> usize {
    (u0 / PI + 0.5).floor().max(0.0) as usize
}

/// Bound states (κR, 𝓜R^{1/2}), deepest first.
pub fn well_bound_states(u0: f64) -> Vec<BoundState> {
    let mut out = Vec::new();
    for j in 1..=bound_state_count(u0) {
        // interior wave number K = √(U0² − κ²) of the j-th level lies in ((j−½)π, jπ)
        let lo = (j as f64 - 0.5) * PI;
        let hi = (j as f64 * PI).min(u0);
        let f = |kk: f64| kk / kk.tan() + (u0 * u0 - kk * kk).max(0.0).sqrt();
        let mut conv = SimpleConvergency { eps: 1e-15, max_iter: 200 };
        let hi_safe = hi - 1e-14 * hi;
        let Ok(kk) = find_root_brent(lo + 1e-14, hi_safe, f, &mut conv) else {
            continue;
        };
        let kappa = (u0 * u0 - kk * kk).sqrt();
        if !(kappa > 0.0) {
            continue;
        }
        let interior = 0.5 - (2.0 * kk).sin() / (4.0 * kk);
        let exterior = kk.sin().powi(2) / (2.0 * kappa);
        let amp = 1.0 / (interior + exterior).sqrt();
        out.push(BoundState { kappa, norm_const: (amp * kk.sin() * kappa.exp()).abs() });
    }
    out.sort_by(|a, b| b.kappa.total_cmp(&a.kappa));
    out
}

/// Phase shifts sampled uniformly on [0, k0R]; the k = 0 entry is the
/// Levinson limit.
pub fn sample_dataset(u0: f64, k0r: f64, n_points: usize) -> Result<ScatteringInput, InputError> {
    if n_points < 16 {
        return Err(InputError::Invalid(format!("need at least 16 samples, got {n_points}")));
    }
    let samples = (0..n_points)
        .map(|i| {
            let k = k0r * i as f64 / (n_points - 1) as f64;
            (k, well_phase_shift(k, u0))
        })
        .collect();
    ScatteringInput::new(0, samples, well_bound_states(u0))
}
