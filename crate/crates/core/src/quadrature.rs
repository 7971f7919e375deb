//! Gauss–Legendre rules on `[0, 1]` with an endpoint-clustering substitution.
//!
//! Order-statistic integrands in the probability scale carry logarithmic
//! singularities at `u = 0` and `u = 1` (the quantile function diverges).
//! Composing with the quintic smoothstep `u = φ(t) = t³(10 − 15t + 6t²)`,
//! whose derivative `30 t²(1 − t)²` vanishes to second order at both ends,
//! turns those into integrands that Gauss–Legendre handles at a high
//! algebraic rate.

use std::f64::consts::PI;

/// Plain Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    /// Nodes in `(0, 1)`, ascending.
    pub nodes: Vec<f64>,
    /// `1 - nodes[k]`, computed without cancellation.
    pub complements: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration in the angle variable,
    /// `x = cos θ`, so that nodes close to the ends keep full relative precision.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut complements = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for k in 0..n.div_ceil(2) {
            // k-th root from the top (x near 1, θ near 0).
            let mut theta = PI * (k as f64 + 0.75) / (nf + 0.5);
            let mut dp = 0.0;
            for _ in 0..100 {
                let x = theta.cos();
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                // d/dθ P_n(cos θ) = -sin θ · P_n'(x)
                let step = p / (-theta.sin() * d);
                theta -= step;
                if step.abs() <= 1e-16 * theta.abs().max(1e-300) {
                    break;
                }
            }
            let x = theta.cos();
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let s = theta.sin();
            let w = 1.0 / (s * s * dp * dp); // 2/((1-x²)P'²) halved for [0,1]
            let half = (theta / 2.0).sin();
            let t_lo = half * half; // (1 - x)/2
            let c = (theta / 2.0).cos();
            let t_hi = c * c;
            let lo = k;
            let hi = n - 1 - k;
            nodes[lo] = t_lo;
            complements[lo] = t_hi;
            weights[lo] = w;
            nodes[hi] = t_hi;
            complements[hi] = t_lo;
            weights[hi] = w;
        }
        if n % 2 == 1 {
            let mid = n / 2;
            nodes[mid] = 0.5;
            complements[mid] = 0.5;
        }
        Self {
            nodes,
            complements,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quintic smoothstep `φ(t)`.
pub fn smoothstep(t: f64) -> f64 {
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

pub fn smoothstep_derivative(t: f64) -> f64 {
    let s = t * (1.0 - t);
    30.0 * s * s
}

/// Gauss–Legendre rule pushed through [`smoothstep`]: nodes `u`, their
/// complements `1 - u` (exact, via `φ(1 - t) = 1 - φ(t)`) and weights
/// `w·φ'(t)`.
#[derive(Debug, Clone)]
pub struct ClusteredRule {
    pub u: Vec<f64>,
    pub uc: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ClusteredRule {
    pub fn new(n: usize) -> Self {
        let gl = GaussLegendre::new(n);
        // Evaluate the polynomial only on the short side; it cancels near 1.
        let (u, uc) = gl
            .nodes
            .iter()
            .zip(&gl.complements)
            .map(|(&t, &tc)| {
                if t <= 0.5 {
                    let lo = smoothstep(t);
                    (lo, 1.0 - lo)
                } else {
                    let lo = smoothstep(tc);
                    (1.0 - lo, lo)
                }
            })
            .unzip();
        let weights = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(&t, &w)| w * smoothstep_derivative(t))
            .collect();
        Self { u, uc, weights }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_and_nodes_are_symmetric() {
        for n in [1, 2, 5, 16, 64, 257, 1024] {
            let gl = GaussLegendre::new(n);
            let total: f64 = gl.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-13, "n={n}: {total}");
            for k in 0..n {
                assert!(gl.nodes[k] > 0.0 && gl.nodes[k] < 1.0);
                assert!((gl.nodes[k] + gl.complements[k] - 1.0).abs() < 1e-15);
                assert!((gl.nodes[k] - gl.complements[n - 1 - k]).abs() < 1e-15);
            }
            assert!(gl.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let gl = GaussLegendre::new(6);
        for deg in 0..12 {
            let got = gl.integrate(|t| t.powi(deg));
            let want = 1.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "deg {deg}: {got} vs {want}");
        }
    }

    #[test]
    fn matches_tabulated_three_point_rule() {
        // Classical nodes on [-1,1]: 0, ±sqrt(3/5); weights 8/9, 5/9.
        let gl = GaussLegendre::new(3);
        let x = (0.6f64).sqrt();
        assert!((gl.nodes[0] - (1.0 - x) / 2.0).abs() < 1e-15);
        assert!((gl.weights[0] - 5.0 / 18.0).abs() < 1e-15);
        assert!((gl.weights[1] - 8.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn clustered_rule_handles_log_singularity() {
        // ∫₀¹ -ln(u) du = 1
        let rule = ClusteredRule::new(256);
        let got: f64 = rule
            .u
            .iter()
            .zip(&rule.weights)
            .map(|(&u, &w)| -w * u.ln())
            .sum();
        assert!((got - 1.0).abs() < 1e-12, "{got}");
        let mass: f64 = rule.weights.iter().sum();
        assert!((mass - 1.0).abs() < 1e-14);
        for (u, uc) in rule.u.iter().zip(&rule.uc) {
            assert!((u + uc - 1.0).abs() < 1e-15, "{u} {uc}");
        }
    }
}
