//! Best linear unbiased estimation of location and scale from the observed
//! prefix of a Type-II right-censored sample.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::moments::MomentSlice;

/// The first `r` order statistics out of `n`, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredSample {
    pub n: usize,
    pub r: usize,
    pub values: Vec<f64>,
}

impl CensoredSample {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        let s = Self {
            n,
            r: values.len(),
            values,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::domain("no observations"));
        }
        if self.values.len() != self.r {
            return Err(Error::domain(format!(
                "r = {} does not match the {} observed values",
                self.r,
                self.values.len()
            )));
        }
        if self.r < 2 {
            return Err(Error::domain(
                "at least two observations are needed to estimate location and scale",
            ));
        }
        if self.r > self.n {
            return Err(Error::domain(format!(
                "r = {} exceeds sample size n = {}",
                self.r, self.n
            )));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("observation {v} is not finite")));
        }
        for (k, w) in self.values.windows(2).enumerate() {
            if w[0] == w[1] {
                return Err(Error::domain(format!(
                    "tied observations at positions {} and {} ({})",
                    k + 1,
                    k + 2,
                    w[0]
                )));
            }
            if w[0] > w[1] {
                return Err(Error::domain(format!(
                    "observations are not ascending at position {}",
                    k + 2
                )));
            }
        }
        Ok(())
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

/// Scalars shared by every estimator and predictor, plus the solved vectors
/// they come from.
///
/// With `Σ` the observed covariance block: `V1 = 1'Σ⁻¹1`, `V2 = α'Σ⁻¹α`,
/// `V3 = 1'Σ⁻¹α`, `A_s = 1 − 1'Σ⁻¹ω_s`, `B_s = α_s − α'Σ⁻¹ω_s` and
/// `delta = V1·V2 − V3²`.
#[derive(Debug, Clone)]
pub struct AuxQuantities {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub delta: f64,
    /// `A_{s_i}` per slice target.
    pub a: Vec<f64>,
    /// `B_{s_i}` per slice target.
    pub b: Vec<f64>,
    /// `Σ⁻¹1`
    pub sigma_inv_one: DVector<f64>,
    /// `Σ⁻¹α`
    pub sigma_inv_alpha: DVector<f64>,
    /// Column `k` is `Σ⁻¹ω_{s_k}`.
    pub sigma_inv_omega: DMatrix<f64>,
    pub(crate) chol: Cholesky,
}

impl AuxQuantities {
    /// `[V1 V3; V3 V2]⁻¹`, formed from the scalars directly.
    pub fn info_inverse(&self) -> [[f64; 2]; 2] {
        let d = self.delta;
        [[self.v2 / d, -self.v3 / d], [-self.v3 / d, self.v1 / d]]
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }
}

/// Relative threshold for declaring `delta` degenerate: `delta ≤ 1e-12·V1·V2`.
pub const DEGENERACY_RTOL: f64 = 1e-12;

pub fn aux_quantities(slice: &MomentSlice) -> Result<AuxQuantities> {
    let r = slice.r;
    let chol = Cholesky::new(&slice.sigma_obs, "observed covariance block")?;
    let ones = DVector::from_element(r, 1.0);
    let p = chol.solve(&ones);
    let q = chol.solve(&slice.alpha_obs);
    let l = slice.num_targets();
    let mut g = DMatrix::zeros(r, l);
    for k in 0..l {
        let col = chol.solve(&slice.omega.column(k).into_owned());
        g.set_column(k, &col);
    }

    let v1 = ones.dot(&p);
    let v2 = slice.alpha_obs.dot(&q);
    let v3 = ones.dot(&q);
    let delta = v1 * v2 - v3 * v3;
    let tol = DEGENERACY_RTOL * v1 * v2;
    if !(delta > tol) {
        return Err(Error::DegenerateDesign { delta, tol });
    }

    let a = (0..l).map(|k| 1.0 - ones.dot(&g.column(k))).collect();
    let b = (0..l)
        .map(|k| slice.alpha_targets[k] - slice.alpha_obs.dot(&g.column(k)))
        .collect();

    Ok(AuxQuantities {
        v1,
        v2,
        v3,
        delta,
        a,
        b,
        sigma_inv_one: p,
        sigma_inv_alpha: q,
        sigma_inv_omega: g,
        chol,
    })
}

/// Coefficient vectors of the BLUEs: `μ̂ = c_μ'X`, `σ̂ = c_σ'X`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlueCoefficients {
    pub mu: DVector<f64>,
    pub sigma: DVector<f64>,
}

pub fn blue_coefficients(aux: &AuxQuantities) -> BlueCoefficients {
    let (p, q) = (&aux.sigma_inv_one, &aux.sigma_inv_alpha);
    let d = aux.delta;
    BlueCoefficients {
        mu: (p * aux.v2 - q * aux.v3) / d,
        sigma: (q * aux.v1 - p * aux.v3) / d,
    }
}

/// BLUEs of location and scale with their unit-free (co)variances;
/// multiply the `*_unit` entries by `σ²` for data units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlueResult {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub var_mu_unit: f64,
    pub var_sigma_unit: f64,
    pub cov_unit: f64,
    pub delta: f64,
}

pub(crate) fn check_sample_matches(sample: &CensoredSample, slice: &MomentSlice) -> Result<()> {
    sample.validate()?;
    if sample.n != slice.n || sample.r != slice.r {
        return Err(Error::domain(format!(
            "sample (n = {}, r = {}) does not match moment slice (n = {}, r = {})",
            sample.n, sample.r, slice.n, slice.r
        )));
    }
    Ok(())
}

pub fn blue(sample: &CensoredSample, slice: &MomentSlice) -> Result<BlueResult> {
    check_sample_matches(sample, slice)?;
    let aux = aux_quantities(slice)?;
    Ok(blue_from_aux(sample, &aux))
}

pub(crate) fn blue_from_aux(sample: &CensoredSample, aux: &AuxQuantities) -> BlueResult {
    let c = blue_coefficients(aux);
    let x = sample.as_vector();
    BlueResult {
        mu_hat: c.mu.dot(&x),
        sigma_hat: c.sigma.dot(&x),
        var_mu_unit: aux.v2 / aux.delta,
        var_sigma_unit: aux.v1 / aux.delta,
        cov_unit: -aux.v3 / aux.delta,
        delta: aux.delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{exponential_moments, uniform_moments};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    // Hand solve for exponential n = 3, r = 2:
    //   Σ = [[1/9, 1/9], [1/9, 13/36]], Σ⁻¹ = [[13, -4], [-4, 4]], α = (1/3, 5/6)
    //   Σ⁻¹1 = (9, 0), Σ⁻¹α = (1, 2)  ⇒  V1 = 9, V2 = 2, V3 = 3, Δ = 9
    //   ω_3 = (1/9, 13/36), Σ⁻¹ω_3 = (0, 1)  ⇒  A = 0, B = 1
    #[test]
    fn exponential_three_two_by_hand() {
        let t = exponential_moments(3).unwrap();
        let aux = aux_quantities(&t.slice(2, &[3]).unwrap()).unwrap();
        assert!(close(aux.v1, 9.0, 1e-13));
        assert!(close(aux.v2, 2.0, 1e-13));
        assert!(close(aux.v3, 3.0, 1e-13));
        assert!(close(aux.delta, 9.0, 1e-13));
        assert!(aux.a[0].abs() < 1e-13);
        assert!(close(aux.b[0], 1.0, 1e-13));
    }

    // Uniform n = 2, r = 2: Σ⁻¹ = [[24, -12], [-12, 24]], α = (1/3, 2/3)
    //   ⇒ V1 = 24, V2 = 8, V3 = 12, Δ = 48
    #[test]
    fn uniform_two_two_by_hand() {
        let t = uniform_moments(2).unwrap();
        let aux = aux_quantities(&t.observed(2).unwrap()).unwrap();
        assert!(close(aux.v1, 24.0, 1e-12));
        assert!(close(aux.v2, 8.0, 1e-12));
        assert!(close(aux.v3, 12.0, 1e-12));
        assert!(close(aux.delta, 48.0, 1e-12));
    }

    #[test]
    fn blue_exponential_by_hand() {
        // c_μ = (5/3, -2/3), c_σ = (-2, 2); data (1, 2) ⇒ μ̂ = 1/3, σ̂ = 2
        let t = exponential_moments(3).unwrap();
        let slice = t.slice(2, &[3]).unwrap();
        let sample = CensoredSample::new(3, vec![1.0, 2.0]).unwrap();
        let res = blue(&sample, &slice).unwrap();
        assert!(close(res.mu_hat, 1.0 / 3.0, 1e-13));
        assert!(close(res.sigma_hat, 2.0, 1e-13));
        assert!(close(res.var_mu_unit, 2.0 / 9.0, 1e-13));
        assert!(close(res.var_sigma_unit, 1.0, 1e-13));
        assert!(close(res.cov_unit, -1.0 / 3.0, 1e-13));
        let c = blue_coefficients(&aux_quantities(&slice).unwrap());
        assert!(close(c.mu[0], 5.0 / 3.0, 1e-13) && close(c.mu[1], -2.0 / 3.0, 1e-13));
        assert!(close(c.sigma[0], -2.0, 1e-13) && close(c.sigma[1], 2.0, 1e-13));
    }

    // A_s = 0 for every exponential slice: ω_s equals the r-th column of the
    // observed block (Markov structure), so Σ⁻¹ω_s = e_r. B_s = α_s − α_r.
    #[test]
    fn exponential_a_vanishes_for_all_small_designs() {
        for n in 3..=6 {
            let t = exponential_moments(n).unwrap();
            for r in 2..n {
                let targets: Vec<usize> = ((r + 1)..=n).collect();
                let aux = aux_quantities(&t.slice(r, &targets).unwrap()).unwrap();
                for (k, &s) in targets.iter().enumerate() {
                    assert!(
                        aux.a[k].abs() < 1e-12,
                        "n={n} r={r} s={s}: A = {}",
                        aux.a[k]
                    );
                    let want = t.alpha[s - 1] - t.alpha[r - 1];
                    assert!(close(aux.b[k], want, 1e-12));
                    assert!(aux.b[k] > 0.0);
                }
            }
        }
    }

    #[test]
    fn single_observation_is_degenerate() {
        let t = uniform_moments(4).unwrap();
        let err = aux_quantities(&t.slice(1, &[2]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DegenerateDesign { .. }));
    }

    #[test]
    fn sample_validation() {
        assert!(CensoredSample::new(5, vec![])
            .unwrap_err()
            .to_string()
            .contains("no observations"));
        assert!(CensoredSample::new(5, vec![1.0, 1.0])
            .unwrap_err()
            .to_string()
            .contains("tied"));
        assert!(CensoredSample::new(5, vec![2.0, 1.0]).is_err());
        assert!(CensoredSample::new(1, vec![1.0, 2.0]).is_err());
        assert!(CensoredSample::new(5, vec![1.0]).is_err());
        assert!(CensoredSample::new(5, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let t = uniform_moments(6).unwrap();
        let slice = t.slice(3, &[4]).unwrap();
        let sample = CensoredSample::new(6, vec![1.0, 2.0]).unwrap();
        assert!(blue(&sample, &slice).unwrap_err().is_domain());
    }

    #[test]
    fn unbiasedness_and_determinant_identity() {
        for t in [exponential_moments(8).unwrap(), uniform_moments(8).unwrap()] {
            for r in 2..=8 {
                let slice = t.observed(r).unwrap();
                let aux = aux_quantities(&slice).unwrap();
                let c = blue_coefficients(&aux);
                let ones = DVector::from_element(r, 1.0);
                let alpha = &slice.alpha_obs;
                assert!((c.mu.dot(&ones) - 1.0).abs() < 1e-12);
                assert!(c.mu.dot(alpha).abs() < 1e-12);
                assert!(c.sigma.dot(&ones).abs() < 1e-12);
                assert!((c.sigma.dot(alpha) - 1.0).abs() < 1e-12);

                let x = CensoredSample::new(8, (1..=r).map(|k| k as f64).collect()).unwrap();
                let res = blue_from_aux(&x, &aux);
                let det = res.var_mu_unit * res.var_sigma_unit - res.cov_unit * res.cov_unit;
                assert!(close(det, 1.0 / res.delta, 1e-10));
                assert!(res.var_mu_unit > 0.0 && res.var_sigma_unit > 0.0);
            }
        }
    }
}
