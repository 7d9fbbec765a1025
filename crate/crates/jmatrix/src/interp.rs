//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson slopes).

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("need at least two samples, got {0}")]
    TooFew(usize),
    #[error("abscissae must be strictly ascending (index {0})")]
    NotAscending(usize),
    #[error("x and y lengths differ ({0} vs {1})")]
    Length(usize, usize),
}

#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl Pchip {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self, InterpError> {
        let n = x.len();
        if n != y.len() {
            return Err(InterpError::Length(n, y.len()));
        }
        if n < 2 {
            return Err(InterpError::TooFew(n));
        }
        if let Some(i) = x.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(InterpError::NotAscending(i + 1));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut slope = vec![0.0; n];
        if n == 2 {
            slope = vec![del[0]; 2];
        } else {
            for i in 1..n - 1 {
                if del[i - 1] * del[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    slope[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
                }
            }
            slope[0] = end_slope(h[0], h[1], del[0], del[1]);
            slope[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Ok(Pchip { x: x.to_vec(), y: y.to_vec(), slope })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        // linear continuation outside the table
        if t <= self.x[0] {
            return self.y[0] + self.slope[0] * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.slope[n - 1] * (t - self.x[n - 1]);
        }
        let i = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (h00, h10) = ((1.0 + 2.0 * s) * (1.0 - s).powi(2), s * (1.0 - s).powi(2));
        let (h01, h11) = (s * s * (3.0 - 2.0 * s), s * s * (s - 1.0));
        h00 * self.y[i] + h10 * h * self.slope[i] + h01 * self.y[i + 1] + h11 * h * self.slope[i + 1]
    }

    /// Derivative of the interpolant.
    pub fn deriv(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.slope[0];
        }
        if t >= self.x[n - 1] {
            return self.slope[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let d00 = 6.0 * s * (s - 1.0) / h;
        let d10 = (1.0 - s) * (1.0 - 3.0 * s);
        let d11 = s * (3.0 * s - 2.0);
        d00 * (self.y[i] - self.y[i + 1]) + d10 * self.slope[i] + d11 * self.slope[i + 1]
    }
}

/// Three-point end slope, limited to keep the end interval monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_cubics_loosely() {
        let x: Vec<f64> = (0..41).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let p = Pchip::new(&x, &y).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(p.eval(*a), *b);
        }
        assert!((p.eval(1.234) - 1.234f64.sin()).abs() < 1e-4);
        assert!((p.deriv(1.234) - 1.234f64.cos()).abs() < 1e-2);
    }

    #[test]
    fn preserves_monotonicity() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 0.0, 1.0, 1.0, 5.0];
        let p = Pchip::new(&x, &y).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=400 {
            let v = p.eval(i as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        assert_eq!(p.eval(0.5), 0.0);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(Pchip::new(&[1.0], &[1.0]), Err(InterpError::TooFew(1))));
        assert!(matches!(Pchip::new(&[0.0, 0.0], &[1.0, 2.0]), Err(InterpError::NotAscending(1))));
    }
}
