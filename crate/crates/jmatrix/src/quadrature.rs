//! Adaptive composite Gauss-Legendre rules.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("panel budget {budget} exhausted with error estimate {estimate:e}")]
    Budget { budget: usize, estimate: f64 },
    #[error("invalid interval [{a}, {b}]")]
    Interval { a: f64, b: f64 },
}

/// Reference Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    pub fn new(points: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(points.max(1)).unwrap());
        let (nodes, weights) = gl.as_node_weight_pairs().iter().copied().unzip();
        Rule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push_panel(&self, a: f64, b: f64, x: &mut Vec<f64>, w: &mut Vec<f64>) {
        let (half, mid) = (0.5 * (b - a), 0.5 * (b + a));
        for (t, wt) in self.nodes.iter().zip(&self.weights) {
            x.push(half * t + mid);
            w.push(half * wt);
        }
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (half, mid) = (0.5 * (b - a), 0.5 * (b + a));
        self.nodes.iter().zip(&self.weights).map(|(t, wt)| half * wt * f(half * t + mid)).sum()
    }
}

/// Flattened nodes and weights of a composite rule.
#[derive(Debug, Clone, Default)]
pub struct NodeSet {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub error_estimate: f64,
    pub panels: usize,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn uniform(rule: &Rule, a: f64, b: f64, panels: usize) -> Self {
        let mut out = NodeSet { panels, ..Default::default() };
        let h = (b - a) / panels as f64;
        for i in 0..panels {
            let lo = a + h * i as f64;
            rule.push_panel(lo, lo + h, &mut out.x, &mut out.w);
        }
        out
    }
}

/// Split panels of [a, b] until each one's halving test changes the
/// integral of `f` by less than `rel_tol` of the running total.
pub fn adaptive_nodes(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rule: &Rule,
    initial_panels: usize,
    rel_tol: f64,
    max_panels: usize,
) -> Result<NodeSet, QuadratureError> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(QuadratureError::Interval { a, b });
    }
    let split_test = |lo: f64, hi: f64| {
        let whole = rule.integrate(lo, hi, &f);
        let mid = 0.5 * (lo + hi);
        let halves = rule.integrate(lo, mid, &f) + rule.integrate(mid, hi, &f);
        (halves, (whole - halves).abs())
    };
    let h = (b - a) / initial_panels.max(1) as f64;
    let mut panels: Vec<(f64, f64, f64, f64)> = (0..initial_panels.max(1))
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == initial_panels.max(1) { b } else { lo + h };
            let (val, err) = split_test(lo, hi);
            (lo, hi, val, err)
        })
        .collect();
    loop {
        let total: f64 = panels.iter().map(|p| p.2.abs()).sum();
        let limit = rel_tol * total.max(f64::MIN_POSITIVE);
        let bad: Vec<usize> = (0..panels.len()).filter(|&i| panels[i].3 > limit).collect();
        if bad.is_empty() {
            break;
        }
        if panels.len() + bad.len() > max_panels {
            let estimate = panels.iter().map(|p| p.3).sum::<f64>() / total.max(f64::MIN_POSITIVE);
            return Err(QuadratureError::Budget { budget: max_panels, estimate });
        }
        let mut next = Vec::with_capacity(panels.len() + bad.len());
        for (i, p) in panels.iter().enumerate() {
            if bad.binary_search(&i).is_ok() {
                let mid = 0.5 * (p.0 + p.1);
                let (v1, e1) = split_test(p.0, mid);
                let (v2, e2) = split_test(mid, p.1);
                next.push((p.0, mid, v1, e1));
                next.push((mid, p.1, v2, e2));
            } else {
                next.push(*p);
            }
        }
        panels = next;
    }
    let mut out = NodeSet { panels: 2 * panels.len(), ..Default::default() };
    for p in &panels {
        let mid = 0.5 * (p.0 + p.1);
        rule.push_panel(p.0, mid, &mut out.x, &mut out.w);
        rule.push_panel(mid, p.1, &mut out.x, &mut out.w);
        out.error_estimate += p.3;
    }
    Ok(out)
}
