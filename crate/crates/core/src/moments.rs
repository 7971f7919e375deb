//! Means and covariances of standardized order statistics.
//!
//! `α_i = E[Z_{i:n}]` and `σ_ij = Cov(Z_{i:n}, Z_{j:n})` are computed in
//! closed form for the exponential and uniform parents and by quadrature in
//! the probability scale for everything else.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky};
use crate::quadrature::ClusteredRule;

pub const MAX_CLOSED_FORM_N: usize = 1000;
/// Largest sample size for which covariances are computed by quadrature.
pub const MAX_QUADRATURE_N: usize = 50;
/// Node count per dimension beyond which doubling stops.
pub const MAX_QUAD_NODES: usize = 4096;
/// Probabilities are clipped to `[δ, 1 − δ]` before the quantile is applied.
pub const CLIP_DELTA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
}

/// Diagnostics attached to quadrature-built tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureInfo {
    /// Nodes per dimension of the accepted rule.
    pub nodes: usize,
    /// Largest change of any moment between the last two node counts.
    pub achieved_change: f64,
    pub clip_delta: f64,
    /// Bound on the bias introduced by clipping, `n·δ·(M² + 2M + 2)` with
    /// `M = max |Q(δ)|, |Q(1 − δ)|`. Valid for tails no heavier than
    /// exponential.
    pub clip_bias_bound: f64,
}

/// Means and covariance matrix of all `n` standardized order statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MomentTableDoc", into = "MomentTableDoc")]
pub struct MomentTable {
    pub family: String,
    pub n: usize,
    pub alpha: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub provenance: Provenance,
    pub quad_tol: Option<f64>,
    pub quadrature: Option<QuadratureInfo>,
}

#[derive(Serialize, Deserialize)]
struct MomentTableDoc {
    schema_version: u32,
    family: String,
    n: usize,
    alpha: Vec<f64>,
    sigma: Vec<Vec<f64>>,
    provenance: Provenance,
    quad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quadrature: Option<QuadratureInfo>,
}

impl From<MomentTable> for MomentTableDoc {
    fn from(t: MomentTable) -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION,
            family: t.family,
            n: t.n,
            alpha: t.alpha.iter().copied().collect(),
            sigma: linalg::to_rows(&t.sigma),
            provenance: t.provenance,
            quad_tol: t.quad_tol,
            quadrature: t.quadrature,
        }
    }
}

impl TryFrom<MomentTableDoc> for MomentTable {
    type Error = Error;

    fn try_from(doc: MomentTableDoc) -> Result<Self> {
        if doc.schema_version != crate::SCHEMA_VERSION {
            return Err(Error::domain(format!(
                "unsupported moment table schema_version {}",
                doc.schema_version
            )));
        }
        if doc.alpha.len() != doc.n || doc.sigma.len() != doc.n {
            return Err(Error::domain("moment table dimensions do not match n"));
        }
        let table = MomentTable {
            family: doc.family,
            n: doc.n,
            alpha: DVector::from_vec(doc.alpha),
            sigma: linalg::from_rows(&doc.sigma)?,
            provenance: doc.provenance,
            quad_tol: doc.quad_tol,
            quadrature: doc.quadrature,
        };
        table.check_invariants()?;
        Ok(table)
    }
}

impl MomentTable {
    /// Closed form where available, quadrature otherwise.
    pub fn for_spec(spec: &DistributionSpec, n: usize) -> Result<Self> {
        match spec.family {
            Family::StandardExponential => exponential_moments(n),
            Family::StandardUniform => uniform_moments(n),
            _ => quadrature_moments(spec, n),
        }
    }

    /// Strictly increasing means, exact symmetry, positive entries and a
    /// successful Cholesky factorization.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n;
        if n == 0 || self.alpha.len() != n || self.sigma.shape() != (n, n) {
            return Err(Error::domain("moment table has inconsistent dimensions"));
        }
        if let Some(i) = (1..n).find(|&i| !(self.alpha[i] > self.alpha[i - 1])) {
            return Err(Error::domain(format!(
                "alpha is not strictly increasing at index {}",
                i + 1
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let s = self.sigma[(i, j)];
                if s != self.sigma[(j, i)] {
                    return Err(Error::domain(format!(
                        "sigma is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if !(s > 0.0) {
                    return Err(Error::domain(format!(
                        "sigma entry ({}, {}) = {s} is not positive",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Cholesky::new(&self.sigma, "moment table covariance")?;
        Ok(())
    }

    /// Observed/unobserved partition for `r` observed order statistics and
    /// the 1-based `targets` to predict.
    pub fn slice(&self, r: usize, targets: &[usize]) -> Result<MomentSlice> {
        if r == 0 {
            return Err(Error::domain(
                "at least one observation is required (r >= 1)",
            ));
        }
        if r >= self.n {
            return Err(Error::domain(format!(
                "nothing to predict: r = {r} leaves no unobserved order statistics (n = {})",
                self.n
            )));
        }
        check_targets(targets, r, self.n)?;
        Ok(self.partition(r, targets))
    }

    /// Observed block only, for estimation without prediction; allows `r = n`.
    pub fn observed(&self, r: usize) -> Result<MomentSlice> {
        if r == 0 || r > self.n {
            return Err(Error::domain(format!(
                "observed count r = {r} must be in 1..={}",
                self.n
            )));
        }
        Ok(self.partition(r, &[]))
    }

    fn partition(&self, r: usize, targets: &[usize]) -> MomentSlice {
        let l = targets.len();
        let idx: Vec<usize> = targets.iter().map(|s| s - 1).collect();
        MomentSlice {
            n: self.n,
            r,
            targets: targets.to_vec(),
            alpha_obs: self.alpha.rows(0, r).into_owned(),
            sigma_obs: self.sigma.view((0, 0), (r, r)).into_owned(),
            omega: DMatrix::from_fn(r, l, |i, k| self.sigma[(i, idx[k])]),
            omega_tt: DMatrix::from_fn(l, l, |a, b| self.sigma[(idx[a], idx[b])]),
            alpha_targets: DVector::from_fn(l, |k, _| self.alpha[idx[k]]),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("moment table serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| Error::domain(format!("invalid moment table JSON: {e}")))
    }
}

fn check_targets(targets: &[usize], r: usize, n: usize) -> Result<()> {
    for (k, &s) in targets.iter().enumerate() {
        if s <= r {
            return Err(Error::domain(format!(
                "target already observed: index {s} is not beyond r = {r}"
            )));
        }
        if s > n {
            return Err(Error::domain(format!(
                "target {s} exceeds sample size n = {n}"
            )));
        }
        if targets[..k].contains(&s) {
            return Err(Error::domain(format!("duplicate target index {s}")));
        }
        if k > 0 && targets[k - 1] > s {
            return Err(Error::domain("targets must be strictly increasing"));
        }
    }
    Ok(())
}

/// Partition of a moment table into the observed prefix and the covariances
/// with the targets to predict. Target indices are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSlice {
    pub n: usize,
    pub r: usize,
    pub targets: Vec<usize>,
    pub alpha_obs: DVector<f64>,
    pub sigma_obs: DMatrix<f64>,
    /// `r × l`; column `k` is `ω_{s_k}`.
    pub omega: DMatrix<f64>,
    /// `l × l`; entries `ω_{s_a s_b}`.
    pub omega_tt: DMatrix<f64>,
    pub alpha_targets: DVector<f64>,
}

impl MomentSlice {
    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn position(&self, s: usize) -> Option<usize> {
        self.targets.iter().position(|&t| t == s)
    }

    pub(crate) fn require_position(&self, s: usize) -> Result<usize> {
        if s <= self.r {
            return Err(Error::domain(format!(
                "target already observed: index {s} is not beyond r = {}",
                self.r
            )));
        }
        if s > self.n {
            return Err(Error::domain(format!(
                "target {s} exceeds sample size n = {}",
                self.n
            )));
        }
        self.position(s)
            .ok_or_else(|| Error::domain(format!("target {s} is not part of this slice")))
    }

    /// Restricts the slice to a subset of its targets.
    pub fn select(&self, targets: &[usize]) -> Result<MomentSlice> {
        check_targets(targets, self.r, self.n)?;
        let pos: Vec<usize> = targets
            .iter()
            .map(|&s| self.require_position(s))
            .collect::<Result<_>>()?;
        let l = pos.len();
        Ok(MomentSlice {
            n: self.n,
            r: self.r,
            targets: targets.to_vec(),
            alpha_obs: self.alpha_obs.clone(),
            sigma_obs: self.sigma_obs.clone(),
            omega: DMatrix::from_fn(self.r, l, |i, k| self.omega[(i, pos[k])]),
            omega_tt: DMatrix::from_fn(l, l, |a, b| self.omega_tt[(pos[a], pos[b])]),
            alpha_targets: DVector::from_fn(l, |k, _| self.alpha_targets[pos[k]]),
        })
    }
}

fn check_closed_form_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_CLOSED_FORM_N {
        return Err(Error::domain(format!(
            "sample size n = {n} must be in 1..={MAX_CLOSED_FORM_N}"
        )));
    }
    Ok(())
}

/// Standard exponential parent via the Rényi representation:
/// `α_i = Σ_{j≤i} 1/(n−j+1)`, `σ_ij = Σ_{k≤min(i,j)} 1/(n−k+1)²`.
pub fn exponential_moments(n: usize) -> Result<MomentTable> {
    check_closed_form_n(n)?;
    let mut alpha = DVector::zeros(n);
    let mut var = vec![0.0; n];
    let (mut a, mut v) = (0.0, 0.0);
    for i in 0..n {
        let d = (n - i) as f64;
        a += 1.0 / d;
        v += 1.0 / (d * d);
        alpha[i] = a;
        var[i] = v;
    }
    let sigma = DMatrix::from_fn(n, n, |i, j| var[i.min(j)]);
    Ok(MomentTable {
        family: Family::StandardExponential.label(),
        n,
        alpha,
        sigma,
        provenance: Provenance::ClosedForm,
        quad_tol: None,
        quadrature: None,
    })
}

/// Standard uniform parent: `α_i = i/(n+1)`,
/// `σ_ij = i(n−j+1)/((n+1)²(n+2))` for `i ≤ j`.
pub fn uniform_moments(n: usize) -> Result<MomentTable> {
    check_closed_form_n(n)?;
    let nf = n as f64;
    let denom = (nf + 1.0) * (nf + 1.0) * (nf + 2.0);
    let alpha = DVector::from_fn(n, |i, _| (i + 1) as f64 / (nf + 1.0));
    let sigma = DMatrix::from_fn(n, n, |i, j| {
        let (lo, hi) = (i.min(j) + 1, i.max(j) + 1);
        (lo * (n - hi + 1)) as f64 / denom
    });
    Ok(MomentTable {
        family: Family::StandardUniform.label(),
        n,
        alpha,
        sigma,
        provenance: Provenance::ClosedForm,
        quad_tol: None,
        quadrature: None,
    })
}

/// Moments by quadrature of the order-statistic densities in the probability
/// scale, doubling the node count until every moment changes by less than
/// `spec.quad_tol`.
///
/// Means use `α_i = ∫ Q(u) f_{i:n}(u) du`; product moments for `i < j` use
/// the joint density of two uniform order statistics with the substitution
/// `u = v·w`, which maps the triangle `0 < u < v < 1` onto the unit square.
pub fn quadrature_moments(spec: &DistributionSpec, n: usize) -> Result<MomentTable> {
    spec.validate()?;
    if n == 0 || n > MAX_QUADRATURE_N {
        return Err(Error::domain(format!(
            "quadrature moments support 1 <= n <= {MAX_QUADRATURE_N}, got {n}"
        )));
    }
    if spec.quad_points * 2 > MAX_QUAD_NODES {
        return Err(Error::domain(format!(
            "quad_points = {} leaves no room to double below the cap of {MAX_QUAD_NODES}",
            spec.quad_points
        )));
    }

    let family = &spec.family;
    let mut nodes = spec.quad_points;
    let mut prev = raw_moments(family, n, nodes);
    loop {
        let next = nodes * 2;
        let cur = raw_moments(family, n, next);
        let change = prev.max_abs_diff(&cur);
        nodes = next;
        if change < spec.quad_tol {
            return finish_quadrature_table(spec, n, cur, nodes, change);
        }
        if nodes * 2 > MAX_QUAD_NODES {
            return Err(Error::QuadratureConvergence {
                achieved: change,
                nodes,
                tol: spec.quad_tol,
            });
        }
        prev = cur;
    }
}

fn finish_quadrature_table(
    spec: &DistributionSpec,
    n: usize,
    raw: RawMoments,
    nodes: usize,
    change: f64,
) -> Result<MomentTable> {
    let alpha = DVector::from_vec(raw.mean.clone());
    let mut sigma = DMatrix::from_fn(n, n, |i, j| raw.product[(i, j)] - raw.mean[i] * raw.mean[j]);
    linalg::symmetrize(&mut sigma);

    let chol = Cholesky::new(&sigma, "quadrature covariance matrix")?;
    debug_assert!(chol.min_pivot() > 0.0);

    let q_lo = spec
        .family
        .quantile_pair(CLIP_DELTA, 1.0 - CLIP_DELTA)
        .abs();
    let q_hi = spec
        .family
        .quantile_pair(1.0 - CLIP_DELTA, CLIP_DELTA)
        .abs();
    let m = q_lo.max(q_hi);
    let clip_bias_bound = n as f64 * CLIP_DELTA * (m * m + 2.0 * m + 2.0);

    let table = MomentTable {
        family: spec.family.label(),
        n,
        alpha,
        sigma,
        provenance: Provenance::Quadrature,
        quad_tol: Some(spec.quad_tol),
        quadrature: Some(QuadratureInfo {
            nodes,
            achieved_change: change,
            clip_delta: CLIP_DELTA,
            clip_bias_bound,
        }),
    };
    table.check_invariants()?;
    Ok(table)
}

/// First moments and raw product moments `E[Z_i Z_j]` at one node count.
struct RawMoments {
    mean: Vec<f64>,
    product: DMatrix<f64>,
}

impl RawMoments {
    fn max_abs_diff(&self, other: &RawMoments) -> f64 {
        let n = self.mean.len();
        let mut d = 0.0f64;
        for i in 0..n {
            d = d.max((self.mean[i] - other.mean[i]).abs());
        }
        // Compare covariances, which is what the table stores.
        for i in 0..n {
            for j in i..n {
                let a = self.product[(i, j)] - self.mean[i] * self.mean[j];
                let b = other.product[(i, j)] - other.mean[i] * other.mean[j];
                d = d.max((a - b).abs());
            }
        }
        d
    }
}

fn clip(u: f64, uc: f64) -> (f64, f64) {
    if u < CLIP_DELTA {
        (CLIP_DELTA, 1.0 - CLIP_DELTA)
    } else if uc < CLIP_DELTA {
        (1.0 - CLIP_DELTA, CLIP_DELTA)
    } else {
        (u, uc)
    }
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// `pow[e][k] = x[k]^e` for `e = 0..=max_e`.
fn power_table(x: &[f64], max_e: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(max_e + 1);
    out.push(vec![1.0; x.len()]);
    for e in 1..=max_e {
        let next: Vec<f64> = out[e - 1].iter().zip(x).map(|(p, xi)| p * xi).collect();
        out.push(next);
    }
    out
}

fn raw_moments(family: &Family, n: usize, nodes: usize) -> RawMoments {
    let rule = ClusteredRule::new(nodes);
    let m = rule.len();
    let fact = factorials(n);

    let q: Vec<f64> = (0..m)
        .map(|k| {
            let (u, uc) = clip(rule.u[k], rule.uc[k]);
            family.quantile_pair(u, uc)
        })
        .collect();
    let pu = power_table(&rule.u, n);
    let puc = power_table(&rule.uc, n);

    // Single integrals: E[Z_i] and E[Z_i²].
    let mut mean = vec![0.0; n];
    let mut second = vec![0.0; n];
    for i in 1..=n {
        let c = fact[n] / (fact[i - 1] * fact[n - i]);
        let (mut s1, mut s2) = (0.0, 0.0);
        for k in 0..m {
            let dens = rule.weights[k] * pu[i - 1][k] * puc[n - i][k];
            s1 += dens * q[k];
            s2 += dens * q[k] * q[k];
        }
        mean[i - 1] = c * s1;
        second[i - 1] = c * s2;
    }

    // Q(v·w) on the tensor grid; row index is v, column index is w.
    let qvw: Vec<f64> = (0..m * m)
        .into_par_iter()
        .map(|idx| {
            let (kv, kw) = (idx / m, idx % m);
            let v = rule.u[kv];
            let u = v * rule.u[kw];
            let uc = rule.uc[kv] + v * rule.uc[kw];
            let (u, uc) = clip(u, uc);
            family.quantile_pair(u, uc)
        })
        .collect();

    let pairs: Vec<(usize, usize)> = (1..=n)
        .flat_map(|i| ((i + 1)..=n).map(move |j| (i, j)))
        .collect();
    let cross: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let c = fact[n] / (fact[i - 1] * fact[j - i - 1] * fact[n - j]);
            let mut total = 0.0;
            for kv in 0..m {
                let row = &qvw[kv * m..(kv + 1) * m];
                let mut inner = 0.0;
                for kw in 0..m {
                    inner += rule.weights[kw] * row[kw] * pu[i - 1][kw] * puc[j - i - 1][kw];
                }
                total += rule.weights[kv] * q[kv] * pu[j - 1][kv] * puc[n - j][kv] * inner;
            }
            c * total
        })
        .collect();

    let mut product = DMatrix::zeros(n, n);
    for i in 0..n {
        product[(i, i)] = second[i];
    }
    for (&(i, j), &e) in pairs.iter().zip(&cross) {
        product[(i - 1, j - 1)] = e;
        product[(j - 1, i - 1)] = e;
    }
    RawMoments { mean, product }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn exponential_small_tables() {
        let t1 = exponential_moments(1).unwrap();
        assert_eq!(t1.alpha[0], 1.0);
        assert_eq!(t1.sigma[(0, 0)], 1.0);

        let t2 = exponential_moments(2).unwrap();
        assert!(close(t2.alpha[0], 0.5, 1e-15) && close(t2.alpha[1], 1.5, 1e-15));
        assert!(close(t2.sigma[(0, 0)], 0.25, 1e-15));
        assert!(close(t2.sigma[(0, 1)], 0.25, 1e-15));
        assert!(close(t2.sigma[(1, 1)], 1.25, 1e-15));

        let t3 = exponential_moments(3).unwrap();
        let want_alpha = [1.0 / 3.0, 5.0 / 6.0, 11.0 / 6.0];
        for (got, want) in t3.alpha.iter().zip(want_alpha) {
            assert!(close(*got, want, 1e-15));
        }
        assert!(close(t3.sigma[(0, 1)], 1.0 / 9.0, 1e-15));
        assert!(close(t3.sigma[(0, 2)], 1.0 / 9.0, 1e-15));
        assert!(close(t3.sigma[(1, 2)], 13.0 / 36.0, 1e-15));
        assert!(close(t3.sigma[(1, 1)], 13.0 / 36.0, 1e-15));
        assert!(close(t3.sigma[(2, 2)], 49.0 / 36.0, 1e-15));
        assert_eq!(t3.provenance, Provenance::ClosedForm);
    }

    #[test]
    fn uniform_small_tables() {
        let t1 = uniform_moments(1).unwrap();
        assert!(close(t1.alpha[0], 0.5, 1e-15));
        assert!(close(t1.sigma[(0, 0)], 1.0 / 12.0, 1e-15));

        let t2 = uniform_moments(2).unwrap();
        assert!(close(t2.alpha[0], 1.0 / 3.0, 1e-15));
        assert!(close(t2.alpha[1], 2.0 / 3.0, 1e-15));
        assert!(close(t2.sigma[(0, 0)], 1.0 / 18.0, 1e-15));
        assert!(close(t2.sigma[(1, 1)], 1.0 / 18.0, 1e-15));
        assert!(close(t2.sigma[(0, 1)], 1.0 / 36.0, 1e-15));

        let t3 = uniform_moments(3).unwrap();
        assert_eq!(t3.alpha.as_slice(), &[0.25, 0.5, 0.75]);
    }

    #[test]
    fn closed_form_range_checks() {
        assert!(exponential_moments(0).unwrap_err().is_domain());
        assert!(uniform_moments(1001).unwrap_err().is_domain());
        assert!(exponential_moments(1000).is_ok());
    }

    #[test]
    fn closed_form_tables_satisfy_invariants() {
        for n in [1, 2, 5, 17, 60] {
            exponential_moments(n).unwrap().check_invariants().unwrap();
            uniform_moments(n).unwrap().check_invariants().unwrap();
        }
    }

    #[test]
    fn slice_of_exponential_three() {
        let t = exponential_moments(3).unwrap();
        let s = t.slice(2, &[3]).unwrap();
        assert!(close(s.alpha_obs[0], 1.0 / 3.0, 1e-15));
        assert!(close(s.alpha_obs[1], 5.0 / 6.0, 1e-15));
        assert!(close(s.omega[(0, 0)], 1.0 / 9.0, 1e-15));
        assert!(close(s.omega[(1, 0)], 13.0 / 36.0, 1e-15));
        assert!(close(s.omega_tt[(0, 0)], 49.0 / 36.0, 1e-15));
        assert!(close(s.alpha_targets[0], 11.0 / 6.0, 1e-15));
    }

    #[test]
    fn single_target_slice_is_sigma_nn() {
        let t = uniform_moments(7).unwrap();
        let s = t.slice(6, &[7]).unwrap();
        assert_eq!(s.omega_tt.shape(), (1, 1));
        assert_eq!(s.omega_tt[(0, 0)], t.sigma[(6, 6)]);
    }

    #[test]
    fn slice_errors() {
        let t = uniform_moments(5).unwrap();
        let msg = t.slice(3, &[3]).unwrap_err().to_string();
        assert!(msg.contains("target already observed"), "{msg}");
        let msg = t.slice(5, &[]).unwrap_err().to_string();
        assert!(msg.contains("nothing to predict"), "{msg}");
        let msg = t.slice(2, &[4, 4]).unwrap_err().to_string();
        assert!(msg.contains("duplicate"), "{msg}");
        assert!(t.slice(2, &[5, 4]).is_err());
        assert!(t.slice(2, &[6]).is_err());
        assert!(t.slice(0, &[3]).is_err());
    }

    #[test]
    fn slice_entries_match_parent() {
        let t = exponential_moments(8).unwrap();
        let s = t.slice(3, &[5, 6, 8]).unwrap();
        for i in 0..3 {
            for (k, &tgt) in s.targets.iter().enumerate() {
                assert_eq!(s.omega[(i, k)], t.sigma[(i, tgt - 1)]);
            }
        }
        let sub = s.select(&[6, 8]).unwrap();
        assert_eq!(sub, t.slice(3, &[6, 8]).unwrap());
        assert!(s.select(&[7]).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let t = exponential_moments(6).unwrap();
        let back = MomentTable::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_json(), t.to_json());
    }

    #[test]
    fn json_rejects_broken_table() {
        let t = uniform_moments(3).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        doc["alpha"][1] = serde_json::json!(0.9);
        assert!(MomentTable::from_json(&doc.to_string()).is_err());
    }

    #[test]
    fn quadrature_normal_small_n() {
        let spec = DistributionSpec::normal();
        let t1 = quadrature_moments(&spec, 1).unwrap();
        assert!(t1.alpha[0].abs() < 1e-9);
        assert!(close(t1.sigma[(0, 0)], 1.0, 1e-9));

        let t2 = quadrature_moments(&spec, 2).unwrap();
        let a = 1.0 / std::f64::consts::PI.sqrt();
        assert!(close(t2.alpha[0], -a, 1e-9) && close(t2.alpha[1], a, 1e-9));
        // Var = 1 − 1/π, Cov = 1/π for the two order statistics of N(0,1).
        let inv_pi = 1.0 / std::f64::consts::PI;
        assert!(close(t2.sigma[(0, 0)], 1.0 - inv_pi, 1e-9));
        assert!(close(t2.sigma[(0, 1)], inv_pi, 1e-9));
        assert_eq!(t2.provenance, Provenance::Quadrature);
        assert!(t2.quadrature.unwrap().clip_bias_bound < 1e-9);
    }

    #[test]
    fn quadrature_rejects_bad_requests() {
        assert!(quadrature_moments(&DistributionSpec::normal(), 51).is_err());
        assert!(quadrature_moments(&DistributionSpec::normal().with_points(4096), 3).is_err());
        let wiggle = DistributionSpec::new(Family::custom("wiggle", |u| (9.0 * u).cos()));
        assert!(quadrature_moments(&wiggle, 3).unwrap_err().is_domain());
    }
}
