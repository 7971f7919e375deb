//! Best linear unbiased prediction of unobserved order statistics.
//!
//! Three routes produce the same coefficient rows:
//!
//! * [`marginal_blup`] evaluates the classical one-target predictor
//!   `μ̂ + σ̂α_s + ω_s'Σ⁻¹(X − μ̂1 − σ̂α)` and expands it into a coefficient
//!   vector through the BLUE coefficient vectors;
//! * [`simultaneous_blup`] (and its `l = 2` case [`joint_blup_pair`]) uses the
//!   closed form `a = Σ⁻¹ω_s + Δ⁻¹(V2·A_s − V3·B_s)Σ⁻¹1 + Δ⁻¹(V1·B_s − V3·A_s)Σ⁻¹α`
//!   obtained by minimizing the MSPE matrix;
//! * [`combo_predictor`] solves the two-multiplier Lagrangian for a linear
//!   combination `l·X_s + k·X_t` directly.
//!
//! All MSPE quantities are unit-free; multiply by `σ²` for data units.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    aux_quantities, blue_coefficients, blue_from_aux, check_sample_matches, AuxQuantities,
    BlueCoefficients, BlueResult, CensoredSample,
};
use crate::linalg::{self, Cholesky};
use crate::moments::MomentSlice;

/// Tolerance used when cross-checking two algebraic routes to the same rows.
pub const ROUTE_AGREEMENT_TOL: f64 = 1e-10;

/// Coefficient rows `a_i'` (one per target) acting on the observed values.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorCoefficients {
    pub targets: Vec<usize>,
    /// `l × r`
    pub coeffs: DMatrix<f64>,
}

impl PredictorCoefficients {
    pub fn row(&self, i: usize) -> DVector<f64> {
        self.coeffs.row(i).transpose()
    }

    /// Largest violation of `a_i'1 = 1` and `a_i'α = α_{s_i}` over all rows.
    pub fn max_constraint_violation(&self, slice: &MomentSlice) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.coeffs.nrows() {
            let row = self.coeffs.row(i);
            let sum: f64 = row.iter().sum();
            let dot = row.transpose().dot(&slice.alpha_obs);
            let pos = slice
                .position(self.targets[i])
                .expect("row target in slice");
            worst = worst
                .max((sum - 1.0).abs())
                .max((dot - slice.alpha_targets[pos]).abs());
        }
        worst
    }
}

/// Unit-free mean squared predictive error matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MspeMatrix {
    pub targets: Vec<usize>,
    pub w: DMatrix<f64>,
}

impl MspeMatrix {
    pub fn det(&self) -> f64 {
        self.w.determinant()
    }

    pub fn scaled(&self, sigma: f64) -> DMatrix<f64> {
        &self.w * (sigma * sigma)
    }
}

/// Simultaneous BLUPs for the targets of a slice.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub n: usize,
    pub r: usize,
    pub coefficients: PredictorCoefficients,
    pub predictions: Vec<f64>,
    pub mspe: MspeMatrix,
    pub blue: BlueResult,
}

#[derive(Serialize, Deserialize)]
pub struct PredictionSetDoc {
    pub schema_version: u32,
    pub n: usize,
    pub r: usize,
    pub targets: Vec<usize>,
    pub predictions: Vec<f64>,
    pub predictions_monotone: bool,
    pub coefficients: Vec<Vec<f64>>,
    pub mspe_unit: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mspe_scaled_sigma_hat: Option<Vec<Vec<f64>>>,
    pub blue: BlueResult,
}

impl PredictionSet {
    pub fn targets(&self) -> &[usize] {
        &self.coefficients.targets
    }

    /// Whether predictions increase with the target index. Reported only;
    /// nothing guarantees it.
    pub fn is_monotone(&self) -> bool {
        self.predictions.windows(2).all(|w| w[0] < w[1])
    }

    pub fn to_doc(&self, scale_by_sigma_hat: bool) -> PredictionSetDoc {
        PredictionSetDoc {
            schema_version: crate::SCHEMA_VERSION,
            n: self.n,
            r: self.r,
            targets: self.targets().to_vec(),
            predictions: self.predictions.clone(),
            predictions_monotone: self.is_monotone(),
            coefficients: linalg::to_rows(&self.coefficients.coeffs),
            mspe_unit: linalg::to_rows(&self.mspe.w),
            mspe_scaled_sigma_hat: scale_by_sigma_hat
                .then(|| linalg::to_rows(&self.mspe.scaled(self.blue.sigma_hat))),
            blue: self.blue,
        }
    }

    pub fn to_json(&self, scale_by_sigma_hat: bool) -> String {
        serde_json::to_string_pretty(&self.to_doc(scale_by_sigma_hat))
            .expect("prediction set serializes")
    }

    /// Plain-text layout: the prediction vector, then the MSPE matrix with
    /// four decimals.
    pub fn render_table(&self, scale_by_sigma_hat: bool) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let (n, r) = (self.n, self.r);
        let _ = writeln!(out, "Simultaneous BLUPs (n = {n}, r = {r})");
        let _ = writeln!(
            out,
            "  mu_hat = {:.4}  sigma_hat = {:.4}",
            self.blue.mu_hat, self.blue.sigma_hat
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "  {:<10} {:>12}", "target", "prediction");
        for (s, p) in self.targets().iter().zip(&self.predictions) {
            let _ = writeln!(out, "  {:<10} {:>12.4}", format!("X({s}:{n})"), p);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "MSPE matrix (unit-free; multiply by sigma^2)");
        write_matrix(&mut out, &self.mspe.w);
        if scale_by_sigma_hat {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "MSPE matrix scaled by sigma_hat^2 = {:.4}",
                self.blue.sigma_hat * self.blue.sigma_hat
            );
            write_matrix(&mut out, &self.mspe.scaled(self.blue.sigma_hat));
        }
        out
    }
}

fn write_matrix(out: &mut String, m: &DMatrix<f64>) {
    use std::fmt::Write;
    for i in 0..m.nrows() {
        out.push(' ');
        for j in 0..m.ncols() {
            let _ = write!(out, " {:>10.4}", m[(i, j)]);
        }
        out.push('\n');
    }
}

/// One-target predictor: its coefficient vector on `X` and its value.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalBlup {
    pub target: usize,
    pub coefficients: DVector<f64>,
    pub value: f64,
}

/// Classical one-target BLUP of `X_{s:n}`.
pub fn marginal_blup(
    sample: &CensoredSample,
    slice: &MomentSlice,
    blue: &BlueResult,
    s: usize,
) -> Result<MarginalBlup> {
    check_sample_matches(sample, slice)?;
    let pos = slice.require_position(s)?;
    let chol = Cholesky::new(&slice.sigma_obs, "observed covariance block")?;
    let aux = aux_quantities(slice)?;
    let bc = blue_coefficients(&aux);
    let (coefficients, value) = marginal_route(slice, &chol, &bc, blue, &sample.as_vector(), pos);
    Ok(MarginalBlup {
        target: s,
        coefficients,
        value,
    })
}

fn marginal_route(
    slice: &MomentSlice,
    chol: &Cholesky,
    bc: &BlueCoefficients,
    blue: &BlueResult,
    x: &DVector<f64>,
    pos: usize,
) -> (DVector<f64>, f64) {
    let r = slice.r;
    let ones = DVector::from_element(r, 1.0);
    let g = chol.solve(&slice.omega.column(pos).into_owned());
    let alpha_s = slice.alpha_targets[pos];

    let resid = x - &ones * blue.mu_hat - &slice.alpha_obs * blue.sigma_hat;
    let value = blue.mu_hat + blue.sigma_hat * alpha_s + g.dot(&resid);

    // μ̂ and σ̂ are c_μ'X and c_σ'X, so the predictor is linear in X with
    // coefficients g + (1 − 1'g)c_μ + (α_s − α'g)c_σ.
    let coeffs =
        &g + &bc.mu * (1.0 - ones.dot(&g)) + &bc.sigma * (alpha_s - slice.alpha_obs.dot(&g));
    (coeffs, value)
}

/// Marginal coefficient rows for every target of the slice, via the
/// one-target route.
pub fn marginal_coefficients(slice: &MomentSlice) -> Result<PredictorCoefficients> {
    let chol = Cholesky::new(&slice.sigma_obs, "observed covariance block")?;
    let aux = aux_quantities(slice)?;
    let bc = blue_coefficients(&aux);
    let dummy = BlueResult {
        mu_hat: 0.0,
        sigma_hat: 0.0,
        var_mu_unit: 0.0,
        var_sigma_unit: 0.0,
        cov_unit: 0.0,
        delta: aux.delta,
    };
    let x = DVector::zeros(slice.r);
    let l = slice.num_targets();
    let mut coeffs = DMatrix::zeros(l, slice.r);
    for k in 0..l {
        let (c, _) = marginal_route(slice, &chol, &bc, &dummy, &x, k);
        coeffs.set_row(k, &c.transpose());
    }
    Ok(PredictorCoefficients {
        targets: slice.targets.clone(),
        coeffs,
    })
}

/// Closed-form rows `a_i = Σ⁻¹ω_{s_i} + κ1_i·Σ⁻¹1 + κ2_i·Σ⁻¹α` with
/// `κ1 = (V2·A − V3·B)/Δ` and `κ2 = (V1·B − V3·A)/Δ`.
pub fn closed_form_coefficients(slice: &MomentSlice, aux: &AuxQuantities) -> PredictorCoefficients {
    let l = slice.num_targets();
    let mut coeffs = DMatrix::zeros(l, slice.r);
    for k in 0..l {
        let (a, b) = (aux.a[k], aux.b[k]);
        let k1 = (aux.v2 * a - aux.v3 * b) / aux.delta;
        let k2 = (aux.v1 * b - aux.v3 * a) / aux.delta;
        let row =
            aux.sigma_inv_omega.column(k) + &aux.sigma_inv_one * k1 + &aux.sigma_inv_alpha * k2;
        coeffs.set_row(k, &row.transpose());
    }
    PredictorCoefficients {
        targets: slice.targets.clone(),
        coeffs,
    }
}

/// `W_ij = ω_{s_i s_j} − ω_{s_i}'Σ⁻¹ω_{s_j} + [A_i B_i]·[V1 V3; V3 V2]⁻¹·[A_j B_j]'`.
pub fn mspe_matrix(slice: &MomentSlice, aux: &AuxQuantities) -> Result<MspeMatrix> {
    let l = slice.num_targets();
    if l == 0 {
        return Err(Error::domain("MSPE matrix needs at least one target"));
    }
    let vi = aux.info_inverse();
    let mut w = DMatrix::zeros(l, l);
    for i in 0..l {
        for j in i..l {
            let quad = aux.a[i] * (vi[0][0] * aux.a[j] + vi[0][1] * aux.b[j])
                + aux.b[i] * (vi[1][0] * aux.a[j] + vi[1][1] * aux.b[j]);
            let v = slice.omega_tt[(i, j)]
                - slice.omega.column(i).dot(&aux.sigma_inv_omega.column(j))
                + quad;
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Cholesky::new(&w, "MSPE matrix")?;
    Ok(MspeMatrix {
        targets: slice.targets.clone(),
        w,
    })
}

/// MSPE matrix of arbitrary coefficient rows (one per slice target):
/// `W_ij = a_i'Σa_j − a_i'ω_{s_j} − a_j'ω_{s_i} + ω_{s_i s_j}`.
/// No optimality or unbiasedness is assumed.
pub fn mspe_of_coefficients(slice: &MomentSlice, coeffs: &DMatrix<f64>) -> DMatrix<f64> {
    let l = coeffs.nrows();
    assert_eq!(l, slice.num_targets(), "one coefficient row per target");
    assert_eq!(
        coeffs.ncols(),
        slice.r,
        "coefficient rows must have length r"
    );
    let sa = &slice.sigma_obs * coeffs.transpose(); // r × l, column j is Σa_j
    let ao = coeffs * &slice.omega; // (i, j) = a_i'ω_{s_j}
    let mut w = DMatrix::zeros(l, l);
    for i in 0..l {
        for j in i..l {
            let v = coeffs.row(i).transpose().dot(&sa.column(j)) - ao[(i, j)] - ao[(j, i)]
                + slice.omega_tt[(i, j)];
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    w
}

/// Sample-independent part of the simultaneous BLUP: built once per slice,
/// applied to any number of samples.
#[derive(Debug, Clone)]
pub struct SimultaneousPredictor {
    pub coefficients: PredictorCoefficients,
    pub mspe: MspeMatrix,
    pub blue_coefficients: BlueCoefficients,
    aux: AuxQuantities,
}

impl SimultaneousPredictor {
    pub fn new(slice: &MomentSlice) -> Result<Self> {
        if slice.num_targets() == 0 {
            return Err(Error::domain("no targets to predict"));
        }
        let aux = aux_quantities(slice)?;
        let coefficients = closed_form_coefficients(slice, &aux);
        #[cfg(debug_assertions)]
        {
            let marginal = marginal_coefficients(slice)?;
            let diff = (&marginal.coeffs - &coefficients.coeffs).amax();
            let scale = coefficients.coeffs.amax().max(1.0);
            debug_assert!(
                diff <= ROUTE_AGREEMENT_TOL * scale,
                "simultaneous and marginal rows differ by {diff:e}"
            );
        }
        let mspe = mspe_matrix(slice, &aux)?;
        let blue_coefficients = blue_coefficients(&aux);
        Ok(Self {
            coefficients,
            mspe,
            blue_coefficients,
            aux,
        })
    }

    pub fn aux(&self) -> &AuxQuantities {
        &self.aux
    }

    /// Predictions `A·x` for observed values `x` (length `r`).
    pub fn predict_values(&self, x: &[f64]) -> Vec<f64> {
        let l = self.coefficients.coeffs.nrows();
        (0..l)
            .map(|i| {
                self.coefficients
                    .coeffs
                    .row(i)
                    .iter()
                    .zip(x)
                    .map(|(c, v)| c * v)
                    .sum()
            })
            .collect()
    }

    pub fn predict(&self, sample: &CensoredSample, n: usize) -> PredictionSet {
        PredictionSet {
            n,
            r: sample.r,
            coefficients: self.coefficients.clone(),
            predictions: self.predict_values(&sample.values),
            mspe: self.mspe.clone(),
            blue: blue_from_aux(sample, &self.aux),
        }
    }
}

/// Simultaneous BLUPs of every target in `slice`.
pub fn simultaneous_blup(sample: &CensoredSample, slice: &MomentSlice) -> Result<PredictionSet> {
    check_sample_matches(sample, slice)?;
    let predictor = SimultaneousPredictor::new(slice)?;
    Ok(predictor.predict(sample, slice.n))
}

/// Joint BLUPs of `X_{s:n}` and `X_{t:n}` (`s < t`, both targets of `slice`).
pub fn joint_blup_pair(
    sample: &CensoredSample,
    slice: &MomentSlice,
    s: usize,
    t: usize,
) -> Result<PredictionSet> {
    if s >= t {
        return Err(Error::domain(format!(
            "joint pair needs s < t, got s = {s}, t = {t}"
        )));
    }
    slice.require_position(s)?;
    slice.require_position(t)?;
    simultaneous_blup(sample, &slice.select(&[s, t])?)
}

/// Predictand `Y = l·X_{s:n} + k·X_{t:n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComboSpec {
    pub s: usize,
    pub t: usize,
    pub l_weight: f64,
    pub k_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComboPrediction {
    pub coefficients: DVector<f64>,
    pub value: f64,
    /// Multipliers on the constraints `c'1 = l + k` and `c'α = l·α_s + k·α_t`.
    pub multipliers: [f64; 2],
}

/// BLUP of a linear combination, from the stationarity condition
/// `c = l·Σ⁻¹ω_s + k·Σ⁻¹ω_t + λ1·Σ⁻¹1 + λ2·Σ⁻¹α` with `(λ1, λ2)` solved from
/// the two unbiasedness constraints.
pub fn combo_predictor(
    sample: &CensoredSample,
    slice: &MomentSlice,
    combo: &ComboSpec,
) -> Result<ComboPrediction> {
    check_sample_matches(sample, slice)?;
    let ComboSpec {
        s,
        t,
        l_weight: l,
        k_weight: k,
    } = *combo;
    if !(slice.r < s && s < t && t <= slice.n) {
        return Err(Error::domain(format!(
            "combination needs r < s < t <= n, got r = {}, s = {s}, t = {t}, n = {}",
            slice.r, slice.n
        )));
    }
    if !l.is_finite() || !k.is_finite() {
        return Err(Error::domain("combination weights must be finite"));
    }
    let (ps, pt) = (slice.require_position(s)?, slice.require_position(t)?);
    let r = slice.r;
    let chol = Cholesky::new(&slice.sigma_obs, "observed covariance block")?;
    let ones = DVector::from_element(r, 1.0);
    let alpha = &slice.alpha_obs;
    let p = chol.solve(&ones);
    let q = chol.solve(alpha);
    let gs = chol.solve(&slice.omega.column(ps).into_owned());
    let gt = chol.solve(&slice.omega.column(pt).into_owned());
    let base = &gs * l + &gt * k;

    // [1'p 1'q; α'p α'q]·[λ1; λ2] = [l + k − 1'base; l·α_s + k·α_t − α'base]
    let m = [[ones.dot(&p), ones.dot(&q)], [alpha.dot(&p), alpha.dot(&q)]];
    let rhs = [
        l + k - ones.dot(&base),
        l * slice.alpha_targets[ps] + k * slice.alpha_targets[pt] - alpha.dot(&base),
    ];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det > crate::estimation::DEGENERACY_RTOL * m[0][0] * m[1][1]) {
        return Err(Error::DegenerateDesign {
            delta: det,
            tol: crate::estimation::DEGENERACY_RTOL * m[0][0] * m[1][1],
        });
    }
    let lambda1 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let lambda2 = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
    let coefficients = base + &p * lambda1 + &q * lambda2;
    let value = coefficients.dot(&sample.as_vector());
    Ok(ComboPrediction {
        coefficients,
        value,
        multipliers: [lambda1, lambda2],
    })
}
