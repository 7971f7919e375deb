//! Independent checks of the closed-form predictors.
//!
//! * [`optimizer`] minimizes `det W(a, b)` numerically over the affine set of
//!   unbiased coefficient pairs, by nullspace elimination rather than
//!   Lagrange multipliers.
//! * [`monte_carlo`] simulates censored samples and compares empirical bias
//!   and MSPE with theory.
//! * [`dominance`] samples random unbiased competitors and checks that no
//!   quadratic form of their MSPE matrix beats the BLUP's.
//!
//! Randomness comes from ChaCha8 seeded with a 64-bit seed. Monte Carlo
//! replication `i` draws from stream `i` of that seed, so results do not
//! depend on how replications are scheduled across threads.

pub mod dominance;
pub mod monte_carlo;
pub mod optimizer;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use dominance::{dominance_probe, DominanceReport};
pub use monte_carlo::{monte_carlo, monte_carlo_with_table, MonteCarloConfig, MonteCarloReport};
pub use optimizer::{numeric_det_minimizer, DetMinimizerReport, OptimizerConfig};

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Orthonormal basis (as columns) of `{d : d'1 = 0, d'α = 0}`, built by
/// modified Gram–Schmidt against `[1, α]`.
pub fn constraint_nullspace(alpha: &DVector<f64>) -> DMatrix<f64> {
    let r = alpha.len();
    let target = r.saturating_sub(2);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(r);
    let push = |v: DVector<f64>, basis: &mut Vec<DVector<f64>>| -> bool {
        let mut w = v;
        for _ in 0..2 {
            for q in basis.iter() {
                let c = q.dot(&w);
                w -= q * c;
            }
        }
        let norm = w.norm();
        if norm > 1e-8 {
            basis.push(w / norm);
            true
        } else {
            false
        }
    };
    push(DVector::from_element(r, 1.0), &mut basis);
    push(alpha.clone(), &mut basis);
    let fixed = basis.len();
    for k in 0..r {
        if basis.len() - fixed == target {
            break;
        }
        push(
            DVector::from_fn(r, |i, _| if i == k { 1.0 } else { 0.0 }),
            &mut basis,
        );
    }
    let cols: Vec<DVector<f64>> = basis.into_iter().skip(fixed).collect();
    if cols.is_empty() {
        DMatrix::zeros(r, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Minimum-norm solution of `a'1 = 1`, `a'α = alpha_target`.
pub fn particular_solution(alpha: &DVector<f64>, alpha_target: f64) -> DVector<f64> {
    let r = alpha.len();
    let ones = DVector::from_element(r, 1.0);
    // (C'C) y = rhs with C = [1 α]
    let g = [[r as f64, alpha.sum()], [alpha.sum(), alpha.dot(alpha)]];
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let y0 = (g[1][1] * 1.0 - g[0][1] * alpha_target) / det;
    let y1 = (g[0][0] * alpha_target - g[1][0] * 1.0) / det;
    ones * y0 + alpha * y1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_is_orthonormal_and_annihilates_constraints() {
        let alpha = DVector::from_vec(vec![-1.5, -1.0, -0.6, -0.3, -0.1, 0.2]);
        let n = constraint_nullspace(&alpha);
        assert_eq!(n.shape(), (6, 4));
        let gram = n.transpose() * &n;
        assert!((gram - DMatrix::identity(4, 4)).amax() < 1e-13);
        let ones = DVector::from_element(6, 1.0);
        assert!((n.transpose() * ones).amax() < 1e-13);
        assert!((n.transpose() * &alpha).amax() < 1e-13);
    }

    #[test]
    fn two_observations_leave_no_freedom() {
        let alpha = DVector::from_vec(vec![0.2, 0.7]);
        assert_eq!(constraint_nullspace(&alpha).ncols(), 0);
        let a = particular_solution(&alpha, 1.4);
        assert!((a.sum() - 1.0).abs() < 1e-14);
        assert!((a.dot(&alpha) - 1.4).abs() < 1e-14);
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        use rand::Rng;
        let x: u64 = rng_for(7, 0).random();
        let y: u64 = rng_for(7, 1).random();
        let z: u64 = rng_for(7, 0).random();
        assert_ne!(x, y);
        assert_eq!(x, z);
    }
}
