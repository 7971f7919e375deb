//! Best linear unbiased estimation and prediction from Type-II right-censored
//! order statistics of a location-scale family.
//!
//! The pipeline is:
//!
//! 1. [`moments`] builds a [`MomentTable`] (means and covariances of the
//!    standardized order statistics) in closed form or by quadrature.
//! 2. [`MomentTable::slice`] partitions it into the observed block and the
//!    covariances with the future order statistics to be predicted.
//! 3. [`estimation`] computes the BLUEs of location and scale.
//! 4. [`prediction`] computes marginal, joint and simultaneous BLUPs together
//!    with their unit-free MSPE matrix.
//! 5. [`verification`] re-derives the same answers through independent routes
//!    (numerical determinant minimization, Monte Carlo, dominance probing).
//!
//! Target indices are 1-based throughout the public API, matching the usual
//! `X_{s:n}` notation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distribution;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod moments;
pub mod prediction;
pub mod quadrature;
pub mod verification;

pub use distribution::{DistributionSpec, Family};
pub use error::{Error, Result};
pub use estimation::{aux_quantities, blue, AuxQuantities, BlueResult, CensoredSample};
pub use moments::{
    exponential_moments, quadrature_moments, uniform_moments, MomentSlice, MomentTable, Provenance,
    QuadratureInfo,
};
pub use prediction::{
    combo_predictor, joint_blup_pair, marginal_blup, mspe_matrix, mspe_of_coefficients,
    simultaneous_blup, ComboSpec, MspeMatrix, PredictionSet, PredictorCoefficients,
};
pub use verification::{
    dominance_probe, monte_carlo, monte_carlo_with_table, numeric_det_minimizer,
    DetMinimizerReport, DominanceReport, MonteCarloConfig, MonteCarloReport, OptimizerConfig,
};

/// Version tag embedded in every serialized report.
pub const SCHEMA_VERSION: u32 = 1;
