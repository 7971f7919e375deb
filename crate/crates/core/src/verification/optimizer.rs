//! Numerical minimization of `det W(a, b)` over unbiased coefficient pairs.
//!
//! The four linear constraints `a'1 = 1, a'α = α_s, b'1 = 1, b'α = α_t` are
//! eliminated by writing `a = a₀ + N·u`, `b = b₀ + N·v` with `N` an
//! orthonormal basis of the constraint nullspace, and the reduced problem in
//! `(u, v)` is solved by gradient descent with Barzilai–Borwein trial steps
//! and Armijo backtracking. The Armijo test uses the exact change of the
//! determinant (expanded from the change of each `W` entry), which stays
//! accurate when the decrease is far below the rounding level of `det W`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{constraint_nullspace, particular_solution, rng_for};
use crate::error::{Error, Result};
use crate::estimation::aux_quantities;
use crate::moments::MomentSlice;
use crate::prediction::closed_form_coefficients;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop once the reduced gradient norm falls below this.
    pub grad_tol: f64,
    /// Weight on the squared constraint residual added to the reported
    /// objective. The parameterization keeps the residual at rounding level.
    pub penalty_weight: f64,
    /// Seed for the perturbed and random starts.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-11,
            penalty_weight: 1e6,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::domain("grad_tol must be positive"));
        }
        if self.max_iters < 100 {
            return Err(Error::domain("max_iters must be at least 100"));
        }
        if !(self.penalty_weight >= 0.0) {
            return Err(Error::domain("penalty_weight must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    WarmPerturbed,
    Random,
    NullspaceZero,
    Given,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: StartKind,
    pub iterations: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetMinimizerReport {
    pub s: usize,
    pub t: usize,
    pub config: OptimizerConfig,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `det W` at the best point, plus the constraint penalty.
    pub objective: f64,
    pub grad_norm: f64,
    pub starts: Vec<StartOutcome>,
    /// Largest coefficient difference between converged starts and the best.
    pub start_disagreement: f64,
    /// Set when converged starts disagree by more than `1e-5`.
    pub disagreement_finding: bool,
}

/// Threshold above which disagreeing starts are reported as a finding.
pub const DISAGREEMENT_FINDING: f64 = 1e-5;

/// The reduced problem for one `(s, t)` pair.
#[derive(Debug, Clone)]
pub struct DetProblem {
    sigma: DMatrix<f64>,
    omega_s: DVector<f64>,
    omega_t: DVector<f64>,
    w_ss: f64,
    w_tt: f64,
    w_st: f64,
    alpha: DVector<f64>,
    alpha_s: f64,
    alpha_t: f64,
    a0: DVector<f64>,
    b0: DVector<f64>,
    basis: DMatrix<f64>,
    penalty_weight: f64,
}

/// State at one point: coefficients, `Σa − ω_s`, `Σb − ω_t` and `W` entries.
struct Point {
    a: DVector<f64>,
    b: DVector<f64>,
    ra: DVector<f64>,
    rb: DVector<f64>,
    w1: f64,
    w2: f64,
    w3: f64,
}

impl DetProblem {
    pub fn new(slice: &MomentSlice, s: usize, t: usize, penalty_weight: f64) -> Result<Self> {
        if s >= t {
            return Err(Error::domain(format!("need s < t, got s = {s}, t = {t}")));
        }
        let ps = slice.require_position(s)?;
        let pt = slice.require_position(t)?;
        let alpha = slice.alpha_obs.clone();
        let alpha_s = slice.alpha_targets[ps];
        let alpha_t = slice.alpha_targets[pt];
        Ok(Self {
            sigma: slice.sigma_obs.clone(),
            omega_s: slice.omega.column(ps).into_owned(),
            omega_t: slice.omega.column(pt).into_owned(),
            w_ss: slice.omega_tt[(ps, ps)],
            w_tt: slice.omega_tt[(pt, pt)],
            w_st: slice.omega_tt[(ps, pt)],
            a0: particular_solution(&alpha, alpha_s),
            b0: particular_solution(&alpha, alpha_t),
            basis: constraint_nullspace(&alpha),
            alpha,
            alpha_s,
            alpha_t,
            penalty_weight,
        })
    }

    pub fn reduced_dim(&self) -> usize {
        2 * self.basis.ncols()
    }

    fn coefficients(&self, z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let m = self.basis.ncols();
        if m == 0 {
            return (self.a0.clone(), self.b0.clone());
        }
        let a = &self.a0 + &self.basis * z.rows(0, m);
        let b = &self.b0 + &self.basis * z.rows(m, m);
        (a, b)
    }

    /// Reduced coordinates of a feasible pair.
    fn coordinates(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let m = self.basis.ncols();
        let mut z = DVector::zeros(2 * m);
        if m > 0 {
            z.rows_mut(0, m)
                .copy_from(&(self.basis.transpose() * (a - &self.a0)));
            z.rows_mut(m, m)
                .copy_from(&(self.basis.transpose() * (b - &self.b0)));
        }
        z
    }

    fn point(&self, a: DVector<f64>, b: DVector<f64>) -> Point {
        let sa = &self.sigma * &a;
        let sb = &self.sigma * &b;
        let w1 = a.dot(&sa) - 2.0 * a.dot(&self.omega_s) + self.w_ss;
        let w2 = b.dot(&sb) - 2.0 * b.dot(&self.omega_t) + self.w_tt;
        let w3 = a.dot(&sb) - a.dot(&self.omega_t) - b.dot(&self.omega_s) + self.w_st;
        Point {
            ra: sa - &self.omega_s,
            rb: sb - &self.omega_t,
            a,
            b,
            w1,
            w2,
            w3,
        }
    }

    fn det(p: &Point) -> f64 {
        p.w1 * p.w2 - p.w3 * p.w3
    }

    fn penalty(&self, p: &Point) -> f64 {
        let ra = [p.a.sum() - 1.0, p.a.dot(&self.alpha) - self.alpha_s];
        let rb = [p.b.sum() - 1.0, p.b.dot(&self.alpha) - self.alpha_t];
        self.penalty_weight * (ra[0] * ra[0] + ra[1] * ra[1] + rb[0] * rb[0] + rb[1] * rb[1])
    }

    fn reduced_gradient(&self, p: &Point) -> DVector<f64> {
        // ∂det/∂a = 2·W2·(Σa − ω_s) − 2·W3·(Σb − ω_t), symmetric for b.
        let ga = &p.ra * (2.0 * p.w2) - &p.rb * (2.0 * p.w3);
        let gb = &p.rb * (2.0 * p.w1) - &p.ra * (2.0 * p.w3);
        let m = self.basis.ncols();
        let mut g = DVector::zeros(2 * m);
        if m > 0 {
            g.rows_mut(0, m).copy_from(&(self.basis.transpose() * ga));
            g.rows_mut(m, m).copy_from(&(self.basis.transpose() * gb));
        }
        g
    }

    /// Reduced gradient norm at an arbitrary feasible pair.
    pub fn gradient_norm_at(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        self.reduced_gradient(&self.point(a.clone(), b.clone()))
            .norm()
    }

    /// `det W(a, b)` at an arbitrary pair.
    pub fn det_at(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        Self::det(&self.point(a.clone(), b.clone()))
    }

    /// Exact change of `det W` when moving by `(da, db)` from `p`.
    fn det_change(&self, p: &Point, da: &DVector<f64>, db: &DVector<f64>) -> f64 {
        let sda = &self.sigma * da;
        let sdb = &self.sigma * db;
        let d1 = 2.0 * da.dot(&p.ra) + da.dot(&sda);
        let d2 = 2.0 * db.dot(&p.rb) + db.dot(&sdb);
        let d3 = da.dot(&p.rb) + db.dot(&p.ra) + da.dot(&sdb);
        p.w1 * d2 + d1 * p.w2 + d1 * d2 - 2.0 * p.w3 * d3 - d3 * d3
    }

    /// Gradient descent from reduced coordinates `z`.
    fn descend(
        &self,
        mut z: DVector<f64>,
        cfg: &OptimizerConfig,
        start: StartKind,
    ) -> StartOutcome {
        let m = self.basis.ncols();
        let (a, b) = self.coefficients(&z);
        let mut p = self.point(a, b);
        let mut g = self.reduced_gradient(&p);
        let mut iterations = 0;
        let mut step = 1.0;
        let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;

        while g.norm() >= cfg.grad_tol && iterations < cfg.max_iters {
            iterations += 1;
            if let Some((dz, dg)) = prev.take() {
                let sy = dz.dot(&dg);
                if sy > 0.0 {
                    step = dz.dot(&dz) / sy;
                }
            }
            let gg = g.dot(&g);
            let mut accepted = false;
            let mut alpha = step;
            for _ in 0..80 {
                let dz = &g * (-alpha);
                let da = &self.basis * dz.rows(0, m);
                let db = &self.basis * dz.rows(m, m);
                if self.det_change(&p, &da, &db) <= -1e-4 * alpha * gg {
                    z += &dz;
                    let (a, b) = self.coefficients(&z);
                    let next = self.point(a, b);
                    let g_next = self.reduced_gradient(&next);
                    prev = Some((dz, &g_next - &g));
                    p = next;
                    g = g_next;
                    accepted = true;
                    step = alpha;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }

        let grad_norm = g.norm();
        StartOutcome {
            start,
            iterations,
            objective: Self::det(&p) + self.penalty(&p),
            grad_norm,
            converged: grad_norm < cfg.grad_tol,
            a: p.a.iter().copied().collect(),
            b: p.b.iter().copied().collect(),
        }
    }

    /// Runs the descent from a given feasible pair.
    pub fn minimize_from(
        &self,
        a: &DVector<f64>,
        b: &DVector<f64>,
        cfg: &OptimizerConfig,
    ) -> StartOutcome {
        self.descend(self.coordinates(a, b), cfg, StartKind::Given)
    }
}

/// Minimizes `det W` from three starts (perturbed closed form, random,
/// nullspace origin) and returns the best converged result.
pub fn numeric_det_minimizer(
    slice: &MomentSlice,
    s: usize,
    t: usize,
    cfg: &OptimizerConfig,
) -> Result<DetMinimizerReport> {
    cfg.validate()?;
    let problem = DetProblem::new(slice, s, t, cfg.penalty_weight)?;
    let dim = problem.reduced_dim();
    let mut rng = rng_for(cfg.seed, 0);

    let pair = slice.select(&[s, t])?;
    let closed = closed_form_coefficients(&pair, &aux_quantities(&pair)?);
    let z_cf = problem.coordinates(&closed.row(0), &closed.row(1));
    let z_warm = DVector::from_fn(dim, |i, _| {
        let e: f64 = rng.sample(StandardNormal);
        z_cf[i] + 0.1 * (1.0 + z_cf[i].abs()) * e
    });
    let z_rand = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));

    let starts = vec![
        problem.descend(z_warm, cfg, StartKind::WarmPerturbed),
        problem.descend(z_rand, cfg, StartKind::Random),
        problem.descend(DVector::zeros(dim), cfg, StartKind::NullspaceZero),
    ];

    let best = starts
        .iter()
        .filter(|o| o.converged)
        .min_by(|x, y| x.objective.total_cmp(&y.objective))
        .cloned();
    let Some(best) = best else {
        let least = starts
            .iter()
            .min_by(|x, y| x.grad_norm.total_cmp(&y.grad_norm))
            .expect("three starts");
        return Err(Error::OptimizerConvergence {
            grad_norm: least.grad_norm,
            iterations: least.iterations,
            objective: least.objective,
            a: least.a.clone(),
            b: least.b.clone(),
        });
    };

    let start_disagreement = starts
        .iter()
        .filter(|o| o.converged)
        .flat_map(|o| {
            o.a.iter()
                .zip(&best.a)
                .chain(o.b.iter().zip(&best.b))
                .map(|(x, y)| (x - y).abs())
        })
        .fold(0.0, f64::max);

    Ok(DetMinimizerReport {
        s,
        t,
        config: *cfg,
        a: best.a.clone(),
        b: best.b.clone(),
        objective: best.objective,
        grad_norm: best.grad_norm,
        start_disagreement,
        disagreement_finding: start_disagreement > DISAGREEMENT_FINDING,
        starts,
    })
}
