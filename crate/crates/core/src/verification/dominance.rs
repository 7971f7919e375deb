//! Random search for an unbiased predictor pair that beats the joint BLUP.
//!
//! For each trial a direction `(l, k)` is drawn on the unit circle and a
//! competitor `(a + N·u, b + N·v)` is drawn with Gaussian `u, v`, where `N`
//! spans the unbiasedness nullspace. The violation is
//! `q(BLUP) − q(competitor)` with `q = [l k]·W·[l k]'`; it should never be
//! positive.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{constraint_nullspace, rng_for};
use crate::error::{Error, Result};
use crate::estimation::aux_quantities;
use crate::moments::MomentSlice;
use crate::prediction::{closed_form_coefficients, mspe_of_coefficients};

/// Violations at or below this are treated as rounding.
pub const DOMINANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolatingInstance {
    pub trial: usize,
    pub l: f64,
    pub k: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub n: usize,
    pub r: usize,
    pub s: usize,
    pub t: usize,
    pub trials: usize,
    pub seed: u64,
    pub nullspace_dim: usize,
    /// Largest `q(BLUP) − q(competitor)` seen; `0` when there is no freedom.
    pub max_violation: f64,
    /// Worst competitor, reported when its violation exceeds the tolerance.
    pub violating_instance: Option<ViolatingInstance>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.violating_instance.is_none()
    }
}

/// Evaluates competitors against the joint BLUP of `(s, t)`.
#[derive(Debug, Clone)]
pub struct DominanceProbe {
    pair: MomentSlice,
    a: DVector<f64>,
    b: DVector<f64>,
    basis: DMatrix<f64>,
    w_blup: DMatrix<f64>,
}

impl DominanceProbe {
    pub fn new(slice: &MomentSlice, s: usize, t: usize) -> Result<Self> {
        if s >= t {
            return Err(Error::domain(format!("need s < t, got s = {s}, t = {t}")));
        }
        let pair = slice.select(&[s, t])?;
        let aux = aux_quantities(&pair)?;
        let coeffs = closed_form_coefficients(&pair, &aux);
        let w_blup = mspe_of_coefficients(&pair, &coeffs.coeffs);
        Ok(Self {
            a: coeffs.row(0),
            b: coeffs.row(1),
            basis: constraint_nullspace(&pair.alpha_obs),
            w_blup,
            pair,
        })
    }

    pub fn nullspace_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `q(BLUP) − q(competitor)` for direction `(l, k)` and nullspace
    /// offsets `u`, `v`. Also returns the competitor rows.
    pub fn violation(
        &self,
        l: f64,
        k: f64,
        u: &DVector<f64>,
        v: &DVector<f64>,
    ) -> (f64, DVector<f64>, DVector<f64>) {
        let a = &self.a + &self.basis * u;
        let b = &self.b + &self.basis * v;
        let mut rows = DMatrix::zeros(2, a.len());
        rows.row_mut(0).copy_from(&a.transpose());
        rows.row_mut(1).copy_from(&b.transpose());
        let w = mspe_of_coefficients(&self.pair, &rows);
        let q = |m: &DMatrix<f64>| l * l * m[(0, 0)] + 2.0 * l * k * m[(0, 1)] + k * k * m[(1, 1)];
        (q(&self.w_blup) - q(&w), a, b)
    }
}

pub fn dominance_probe(
    slice: &MomentSlice,
    s: usize,
    t: usize,
    trials: usize,
    seed: u64,
) -> Result<DominanceReport> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let probe = DominanceProbe::new(slice, s, t)?;
    let m = probe.nullspace_dim();
    let mut rng = rng_for(seed, 0);
    let mut max_violation = if m == 0 { 0.0 } else { f64::NEG_INFINITY };
    let mut worst: Option<ViolatingInstance> = None;

    if m > 0 {
        for trial in 0..trials {
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            let (l, k) = (theta.cos(), theta.sin());
            let u = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
            let v = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
            let (viol, a, b) = probe.violation(l, k, &u, &v);
            if viol > max_violation {
                max_violation = viol;
                if viol > DOMINANCE_TOL {
                    worst = Some(ViolatingInstance {
                        trial,
                        l,
                        k,
                        a: a.iter().copied().collect(),
                        b: b.iter().copied().collect(),
                        violation: viol,
                    });
                }
            }
        }
    }

    Ok(DominanceReport {
        n: slice.n,
        r: slice.r,
        s,
        t,
        trials,
        seed,
        nullspace_dim: m,
        max_violation,
        violating_instance: worst,
    })
}
