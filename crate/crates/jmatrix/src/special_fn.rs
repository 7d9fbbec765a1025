//! Scalar special functions shared by both bases.

use num_complex::Complex64;
use thiserror::Error;

use crate::dd::Dd;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialFnError {
    #[error("{func}: argument {x} outside the domain")]
    Domain { func: &'static str, x: f64 },
    #[error("kummer: |z| = {z} beyond the stable range {limit}")]
    OutOfRange { z: f64, limit: f64 },
    #[error("kummer: relative error estimate {estimate:e} after widening precision")]
    LossOfPrecision { estimate: f64 },
}

/// Value plus a running error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalDiagnostics {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub terms_used: usize,
}

/// Largest |z| accepted by [`kummer_seed`].
pub const KUMMER_Z_LIMIT: f64 = 200.0;
const CANCELLATION_TOL: f64 = 1e-10;
const MAX_TERMS: usize = 4000;

pub fn ln_gamma(x: f64) -> Result<f64, SpecialFnError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecialFnError::Domain { func: "ln_gamma", x });
    }
    Ok(libm::lgamma(x))
}

/// Associated Laguerre polynomial by the upward three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

struct SeriesSum {
    sum: f64,
    abs_sum: f64,
    terms: usize,
}

fn stop_now(j: usize, z: f64, term: f64, sum: f64) -> bool {
    (j as f64) > z && term.abs() <= 1e-18 * sum.abs()
}

fn series_f64(a: f64, b: f64, z: f64) -> SeriesSum {
    // Neumaier compensated summation.
    let (mut sum, mut comp, mut abs_sum) = (0.0f64, 0.0f64, 0.0f64);
    let mut term = 1.0f64;
    let mut j = 0usize;
    while j < MAX_TERMS {
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        abs_sum += term.abs();
        let jf = j as f64;
        term *= (a + jf) * z / ((b + jf) * (jf + 1.0));
        j += 1;
        if term == 0.0 || stop_now(j, z, term, sum + comp) {
            break;
        }
    }
    SeriesSum { sum: sum + comp, abs_sum, terms: j }
}

fn series_dd(a: f64, b: f64, z: f64) -> SeriesSum {
    let mut sum = Dd::ZERO;
    let mut term = Dd::ONE;
    let mut abs_sum = 0.0f64;
    let zd = Dd::new(z);
    let mut j = 0usize;
    while j < MAX_TERMS {
        sum = sum + term;
        abs_sum += term.hi.abs();
        let jf = j as f64;
        term = term * Dd::new(a + jf) * zd / (Dd::new(b + jf) * Dd::new(jf + 1.0));
        j += 1;
        if term.hi == 0.0 || stop_now(j, z, term.hi, sum.hi) {
            break;
        }
    }
    SeriesSum { sum: sum.to_f64(), abs_sum, terms: j }
}

/// Confluent hypergeometric M(a, b, z) by power series, widening to
/// double-double when cancellation is detected. Negative z goes through
/// the Kummer transformation so the summed series never alternates in z.
pub fn kummer_seed(a: f64, bpar: f64, z: f64) -> Result<EvalDiagnostics, SpecialFnError> {
    if is_nonpositive_integer(bpar) {
        return Err(SpecialFnError::Domain { func: "kummer", x: bpar });
    }
    if !z.is_finite() || z.abs() > KUMMER_Z_LIMIT {
        return Err(SpecialFnError::OutOfRange { z, limit: KUMMER_Z_LIMIT });
    }
    if z == 0.0 {
        return Ok(EvalDiagnostics { value: 1.0, abs_error_estimate: 0.0, terms_used: 1 });
    }
    let (a_eff, z_eff, scale) = if z < 0.0 { (bpar - a, -z, z.exp()) } else { (a, z, 1.0) };

    let fast = series_f64(a_eff, bpar, z_eff);
    let rel = |s: &SeriesSum, eps: f64| 8.0 * eps * s.abs_sum / s.sum.abs().max(f64::MIN_POSITIVE);
    let mut best = fast;
    let mut estimate = rel(&best, f64::EPSILON);
    if estimate > CANCELLATION_TOL {
        best = series_dd(a_eff, bpar, z_eff);
        estimate = rel(&best, 1e-31).max(f64::EPSILON);
        if estimate > CANCELLATION_TOL {
            return Err(SpecialFnError::LossOfPrecision { estimate });
        }
    }
    let value = best.sum * scale;
    Ok(EvalDiagnostics { value, abs_error_estimate: estimate * value.abs(), terms_used: best.terms })
}

/// ₂F₁(−m, β; γ; z) for a non-negative integer m: an exact (m+1)-term sum.
pub fn gauss_2f1_terminating(m: u32, beta: u32, gamma: u32, z: Complex64) -> Complex64 {
    let (beta, gamma) = (beta as f64, gamma as f64);
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for j in 0..m {
        let jf = j as f64;
        term *= z * ((jf - m as f64) * (beta + jf) / ((gamma + jf) * (jf + 1.0)));
        sum += term;
    }
    sum
}
