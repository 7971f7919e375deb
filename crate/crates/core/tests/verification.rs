use blup_core::prediction::closed_form_coefficients;
use blup_core::verification::optimizer::DetProblem;
use blup_core::{
    aux_quantities, dominance_probe, exponential_moments, monte_carlo, numeric_det_minimizer,
    uniform_moments, DistributionSpec, MomentTable, MonteCarloConfig, OptimizerConfig,
};

#[test]
fn closed_form_point_is_stationary() {
    let mut tables: Vec<MomentTable> = Vec::new();
    for n in 4..=8 {
        tables.push(exponential_moments(n).unwrap());
        tables.push(uniform_moments(n).unwrap());
        tables.push(MomentTable::for_spec(&DistributionSpec::normal(), n).unwrap());
    }
    for t in &tables {
        let n = t.n;
        for r in 2..n - 1 {
            for s in r + 1..=n {
                for u in s + 1..=n {
                    let slice = t.slice(r, &[s, u]).unwrap();
                    let c = closed_form_coefficients(&slice, &aux_quantities(&slice).unwrap());
                    let p = DetProblem::new(&slice, s, u, 0.0).unwrap();
                    let g = p.gradient_norm_at(&c.row(0), &c.row(1));
                    assert!(g < 1e-8, "{} n={n} r={r} ({s},{u}): {g:e}", t.family);
                }
            }
        }
    }
}

#[test]
fn bias_standard_error_shrinks_with_replications() {
    let spec = DistributionSpec::exponential();
    let table = exponential_moments(5).unwrap();
    let mut prev: Option<Vec<f64>> = None;
    for reps in [1_000, 10_000, 100_000] {
        let cfg = MonteCarloConfig {
            mu: 0.0,
            sigma: 2.0,
            n: 5,
            r: 3,
            targets: vec![4, 5],
            replications: reps,
            seed: 31,
        };
        let rep = blup_core::monte_carlo_with_table(&spec, &table, &cfg).unwrap();
        let se = rep.bias_standard_errors.clone().unwrap();
        for (b, e) in rep.empirical_bias.iter().zip(&se) {
            assert!(b.abs() <= 3.0 * e, "reps {reps}: bias {b} se {e}");
        }
        if let Some(p) = prev {
            for (old, new) in p.iter().zip(&se) {
                let ratio = old / new;
                let ideal = 10f64.sqrt();
                assert!(ratio > ideal / 2.0 && ratio < ideal * 2.0, "{ratio}");
            }
        }
        prev = Some(se);
    }
}

#[test]
fn monte_carlo_rejects_mismatched_table() {
    let cfg = MonteCarloConfig {
        mu: 0.0,
        sigma: 1.0,
        n: 6,
        r: 3,
        targets: vec![4],
        replications: 10,
        seed: 0,
    };
    let table = exponential_moments(5).unwrap();
    let err = blup_core::monte_carlo_with_table(&DistributionSpec::exponential(), &table, &cfg);
    assert!(err.unwrap_err().is_domain());
    assert!(monte_carlo(&DistributionSpec::exponential(), &cfg).is_ok());
}

#[test]
fn reports_are_reproducible_json() {
    let t = MomentTable::for_spec(&DistributionSpec::normal(), 6).unwrap();
    let slice = t.slice(3, &[4, 6]).unwrap();
    let run = || {
        let d = dominance_probe(&slice, 4, 6, 500, 17).unwrap();
        let o = numeric_det_minimizer(
            &slice,
            4,
            6,
            &OptimizerConfig {
                seed: 17,
                ..Default::default()
            },
        )
        .unwrap();
        (
            serde_json::to_string(&d).unwrap(),
            serde_json::to_string(&o).unwrap(),
        )
    };
    assert_eq!(run(), run());
    let (d, o) = run();
    let d: serde_json::Value = serde_json::from_str(&d).unwrap();
    assert_eq!(d["seed"], 17);
    let o: serde_json::Value = serde_json::from_str(&o).unwrap();
    assert_eq!(o["config"]["seed"], 17);
    assert_eq!(o["starts"].as_array().unwrap().len(), 3);
}

#[test]
fn optimizer_errors_are_domain_errors() {
    let t = exponential_moments(6).unwrap();
    let slice = t.slice(3, &[4, 5]).unwrap();
    let cfg = OptimizerConfig::default();
    assert!(numeric_det_minimizer(&slice, 5, 4, &cfg)
        .unwrap_err()
        .is_domain());
    assert!(numeric_det_minimizer(&slice, 4, 6, &cfg)
        .unwrap_err()
        .is_domain());
}
