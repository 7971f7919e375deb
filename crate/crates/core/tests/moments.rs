use blup_core::{
    exponential_moments, quadrature_moments, uniform_moments, DistributionSpec, Family, MomentTable,
};

const TOL: f64 = 1e-9;

fn max_table_diff(a: &MomentTable, b: &MomentTable) -> f64 {
    (&a.alpha - &b.alpha)
        .amax()
        .max((&a.sigma - &b.sigma).amax())
}

#[test]
fn quadrature_reproduces_closed_forms() {
    for n in [1, 2, 5, 8, 12] {
        let spec = DistributionSpec::exponential().with_tol(TOL);
        let quad = quadrature_moments(&spec, n).unwrap();
        let exact = exponential_moments(n).unwrap();
        let d = max_table_diff(&quad, &exact);
        assert!(d < 10.0 * TOL, "exponential n = {n}: {d:e}");

        let spec = DistributionSpec::uniform().with_tol(TOL);
        let quad = quadrature_moments(&spec, n).unwrap();
        let exact = uniform_moments(n).unwrap();
        let d = max_table_diff(&quad, &exact);
        assert!(d < 10.0 * TOL, "uniform n = {n}: {d:e}");
    }
}

#[test]
fn normal_ten_matches_high_precision_integration() {
    // Independent 25-digit integration in x-space.
    let reference = [
        (1, -1.538_752_730_835_173, 0.34434382326069026),
        (3, -0.6560591053647612, 0.17500328340301374),
        (5, -0.12266775228433806, 0.15105390390822768),
    ];
    let t = MomentTable::for_spec(&DistributionSpec::normal().with_tol(TOL), 10).unwrap();
    for (i, mean, var) in reference {
        assert!((t.alpha[i - 1] - mean).abs() < 10.0 * TOL, "alpha_{i}");
        assert!(
            (t.sigma[(i - 1, i - 1)] - var).abs() < 10.0 * TOL,
            "sigma_{i}{i}"
        );
    }
}

#[test]
fn normal_symmetries_and_sums() {
    for n in [3, 6, 9] {
        let t = MomentTable::for_spec(&DistributionSpec::normal(), n).unwrap();
        let tol = 10.0 * t.quad_tol.unwrap();
        for i in 0..n {
            assert!((t.alpha[i] + t.alpha[n - 1 - i]).abs() < tol);
            for j in 0..n {
                assert!((t.sigma[(i, j)] - t.sigma[(n - 1 - j, n - 1 - i)]).abs() < tol);
            }
            // Σ_j Cov(Z_i, Z_j) = 1 for a standard normal parent
            let row: f64 = t.sigma.row(i).iter().sum();
            assert!((row - 1.0).abs() < 10.0 * tol);
        }
        assert!(t.alpha.sum().abs() < tol * n as f64);
        t.check_invariants().unwrap();
    }
}

#[test]
fn mean_sums_match_parent_mean() {
    for n in [2, 7, 20] {
        let e = exponential_moments(n).unwrap();
        assert!((e.alpha.sum() - n as f64).abs() < 1e-12);
        let u = uniform_moments(n).unwrap();
        assert!((u.alpha.sum() - n as f64 / 2.0).abs() < 1e-12);
        for i in 0..n {
            assert!((u.alpha[i] + u.alpha[n - 1 - i] - 1.0).abs() < 1e-15);
        }
    }
}

#[test]
fn custom_quantile_builds_valid_table() {
    let logistic = Family::custom("logistic", |u: f64| (u / (1.0 - u)).ln());
    let spec = DistributionSpec::new(logistic).with_tol(1e-8);
    let t = quadrature_moments(&spec, 6).unwrap();
    t.check_invariants().unwrap();
    assert!(t.family.starts_with("custom-quantile:"));
    for i in 0..6 {
        assert!((t.alpha[i] + t.alpha[5 - i]).abs() < 1e-7);
    }
    let info = t.quadrature.unwrap();
    assert!(info.achieved_change < 1e-8);
    assert!(info.clip_bias_bound > 0.0);
}

#[test]
fn logistic_extreme_mean_is_harmonic() {
    // E[max of n standard logistic] = H_{n-1} (harmonic number).
    let logistic = Family::custom("logistic", |u: f64| (u / (1.0 - u)).ln());
    let t = quadrature_moments(&DistributionSpec::new(logistic).with_tol(1e-9), 5).unwrap();
    let h4 = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
    assert!((t.alpha[4] - h4).abs() < 1e-8, "{}", t.alpha[4]);
}

#[test]
fn cached_table_round_trips_bit_exact() {
    let t = MomentTable::for_spec(&DistributionSpec::normal(), 7).unwrap();
    let back = MomentTable::from_json(&t.to_json()).unwrap();
    assert_eq!(t, back);
    assert_eq!(t.to_json(), back.to_json());
}
