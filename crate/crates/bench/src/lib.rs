//! Shared fixtures for the benchmarks.

use blup_core::{CensoredSample, DistributionSpec, MomentTable};

pub const LIFE_TEST: [f64; 5] = [87.0, 92.8, 117.1, 133.6, 138.6];

pub fn life_test_sample() -> CensoredSample {
    CensoredSample::new(10, LIFE_TEST.to_vec()).expect("valid sample")
}

pub fn normal_table(n: usize) -> MomentTable {
    MomentTable::for_spec(&DistributionSpec::normal(), n).expect("normal moments")
}
