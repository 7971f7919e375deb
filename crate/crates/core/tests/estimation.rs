use blup_core::{blue, exponential_moments, CensoredSample, MomentTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn blue_simulation_exponential() {
    let (n, r, mu, sigma) = (5usize, 3usize, 10.0, 2.0);
    let table: MomentTable = exponential_moments(n).unwrap();
    let slice = table.observed(r).unwrap();
    let reps = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut mus = Vec::with_capacity(reps);
    let mut sigmas = Vec::with_capacity(reps);
    let mut unit = None;
    for _ in 0..reps {
        let mut x: Vec<f64> = (0..n)
            .map(|_| mu - sigma * (1.0 - rng.random::<f64>()).ln())
            .collect();
        x.sort_by(f64::total_cmp);
        let sample = CensoredSample::new(n, x[..r].to_vec()).unwrap();
        let b = blue(&sample, &slice).unwrap();
        mus.push(b.mu_hat);
        sigmas.push(b.sigma_hat);
        unit = Some(b);
    }
    let unit = unit.unwrap();
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (m, var, (var / v.len() as f64).sqrt())
    };
    let (m_mu, var_mu, se_mu) = stats(&mus);
    let (m_sigma, _, se_sigma) = stats(&sigmas);
    assert!((m_mu - mu).abs() < 3.0 * se_mu, "{m_mu} ± {se_mu}");
    assert!(
        (m_sigma - sigma).abs() < 3.0 * se_sigma,
        "{m_sigma} ± {se_sigma}"
    );
    let rel = (var_mu / (sigma * sigma) - unit.var_mu_unit).abs() / unit.var_mu_unit;
    assert!(rel < 0.05, "{rel}");
}

#[test]
fn full_sample_estimation_is_allowed() {
    let table = exponential_moments(4).unwrap();
    let slice = table.observed(4).unwrap();
    let sample = CensoredSample::new(4, vec![0.3, 0.9, 1.4, 2.8]).unwrap();
    let b = blue(&sample, &slice).unwrap();
    assert!(b.sigma_hat > 0.0);
    let det = b.var_mu_unit * b.var_sigma_unit - b.cov_unit * b.cov_unit;
    assert!((det * b.delta - 1.0).abs() < 1e-10);
}

#[test]
fn empty_sample_is_rejected() {
    let err = CensoredSample::new(5, vec![]).unwrap_err();
    assert!(err.is_domain());
    assert!(err.to_string().contains("no observations"));
}
