//! Gauss–Legendre rules.
//!
//! Nodes come from Newton iteration on the three-term Legendre recurrence,
//! started from the Tricomi asymptotic guess. This is accurate to a few ulps
//! for every order used here (up to a few thousand nodes).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::config(format!(
                "Gauss-Legendre rule needs at least 2 nodes, got {n}"
            )));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            // Tricomi initial guess for the i-th largest root.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos() * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            nodes[n - 1 - i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[m - 1] = 0.0;
        }
        // Ascending order reads better in tables and tests.
        nodes.reverse();
        weights.reverse();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `P_n(x)` and `P_n'(x)` by upward recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A composite rule: `panels` equal sub-intervals each carrying a
/// `per_panel`-point Gauss–Legendre rule. Produces flat node/weight lists on
/// a fixed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    /// Nodes per panel used when a total node count is requested.
    pub const PANEL_ORDER: usize = 16;

    pub fn new(a: f64, b: f64, panels: usize, per_panel: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::config("composite rule needs at least one panel"));
        }
        if !(b > a) {
            return Err(Error::domain(format!("empty interval [{a}, {b}]")));
        }
        let rule = GaussLegendre::new(per_panel)?;
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * per_panel);
        let mut weights = Vec::with_capacity(panels * per_panel);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let hi = if p + 1 == panels { b } else { lo + h };
            for (x, w) in rule.mapped(lo, hi) {
                nodes.push(x);
                weights.push(w);
            }
        }
        Ok(Self { nodes, weights })
    }

    /// A composite rule with roughly `total` nodes: 16-point panels when
    /// `total` allows, a single panel otherwise.
    pub fn with_total_nodes(a: f64, b: f64, total: usize) -> Result<Self> {
        if total >= 2 * Self::PANEL_ORDER {
            let panels = total / Self::PANEL_ORDER;
            Self::new(a, b, panels, Self::PANEL_ORDER)
        } else {
            Self::new(a, b, 1, total)
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_orders() {
        assert!(GaussLegendre::new(0).is_err());
        assert!(GaussLegendre::new(1).is_err());
    }

    #[test]
    fn two_point_rule_is_textbook() {
        let r = GaussLegendre::new(2).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert!((r.nodes()[0] + x).abs() < 1e-15);
        assert!((r.nodes()[1] - x).abs() < 1e-15);
        assert!((r.weights()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [3, 8, 17, 64, 257, 1024] {
            let r = GaussLegendre::new(n).unwrap();
            let s: f64 = r.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-12, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let n = 7;
        let r = GaussLegendre::new(n).unwrap();
        for deg in 0..(2 * n) {
            let got = r.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
            let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((got - want).abs() < 1e-14, "degree {deg}: {got} vs {want}");
        }
    }

    #[test]
    fn composite_rule_integrates_oscillation() {
        // integral of cos(200 x) on [0, 1] = sin(200)/200
        let rule = CompositeRule::with_total_nodes(0.0, 1.0, 512).unwrap();
        let got: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * (200.0 * x).cos())
            .sum();
        assert!((got - 200f64.sin() / 200.0).abs() < 1e-13);
    }
}
