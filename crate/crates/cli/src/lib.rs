//! `blup` command-line front end.
//!
//! Every subcommand writes a JSON document (or a plain-text table) to
//! standard output. Failures are reported on standard error as one line of
//! JSON, with exit code 2 for invalid input, 3 for numerical breakdown and 4
//! when a verification check does not hold.

pub mod cache;
pub mod error;
pub mod input;
pub mod targets;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use blup_core::distribution::TabulatedQuantile;
use blup_core::prediction::closed_form_coefficients;
use blup_core::verification::optimizer::OptimizerConfig;
use blup_core::{
    aux_quantities, blue, dominance_probe, monte_carlo_with_table, mspe_matrix,
    numeric_det_minimizer, simultaneous_blup, BlueResult, DetMinimizerReport, DistributionSpec,
    DominanceReport, Family, MomentTable, MonteCarloConfig, MonteCarloReport,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::input::{ingest, IngestOptions};
use crate::targets::parse_targets;

#[derive(Debug, Parser)]
#[command(
    name = "blup",
    version,
    about = "BLUEs and BLUPs for Type-II censored samples"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    /// `normal`, `exponential`, `uniform`, or a path to a tabulated quantile
    /// JSON file `{"name": .., "u": [..], "q": [..]}`
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// Starting Gauss-Legendre node count
    #[arg(long)]
    pub quad_points: Option<usize>,
    /// Use this moment table instead of computing one
    #[arg(long)]
    pub moments_file: Option<PathBuf>,
    /// Moment table cache directory (defaults to $BLUP_CACHE_DIR)
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// CSV (one value per line, optional `value` header) or JSON sample file
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    /// Defaults to the number of values in the input
    #[arg(long)]
    pub r: Option<usize>,
    /// Sort unsorted input instead of rejecting it
    #[arg(long)]
    pub allow_unsorted: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build (or load) the moment table of a family
    Moments {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        n: usize,
        /// Also write the table JSON to this file
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        output_format: OutputFormat,
    },
    /// Best linear unbiased estimates of location and scale
    Estimate {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        output_format: OutputFormat,
    },
    /// Simultaneous predictions of unobserved order statistics
    Predict {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        sample: SampleArgs,
        /// Target indices, e.g. `6-10` or `6,8,10`
        #[arg(long)]
        targets: String,
        /// Also report the MSPE matrix scaled by the estimated σ²
        #[arg(long)]
        sigma_hat_scale: bool,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        output_format: OutputFormat,
    },
    /// Compare the closed-form pair predictor with numerical minimization
    VerifyOptimizer {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        grad_tol: Option<f64>,
        #[arg(long)]
        penalty_weight: Option<f64>,
        /// Largest tolerated coefficient difference
        #[arg(long, default_value_t = 1e-6)]
        fail_on: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        output_format: OutputFormat,
    },
    /// Monte Carlo check of bias and MSPE
    VerifyMc {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        targets: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest tolerated relative MSPE error
        #[arg(long, default_value_t = 0.05)]
        fail_on: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        output_format: OutputFormat,
    },
    /// Random search for unbiased pairs that beat the joint predictor
    VerifyDominance {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest tolerated violation
        #[arg(long, default_value_t = 1e-10)]
        fail_on: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        output_format: OutputFormat,
    },
}

/// Bias z-score above which `verify-mc` fails.
pub const MC_BIAS_Z_LIMIT: f64 = 3.0;

struct Output {
    text: String,
    failure: Option<String>,
}

impl Output {
    fn ok(text: String) -> Self {
        Self {
            text,
            failure: None,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    family: String,
    #[serde(flatten)]
    body: T,
}

fn envelope<T: Serialize>(command: &str, family: &Family, body: T) -> String {
    let doc = Envelope {
        schema_version: blup_core::SCHEMA_VERSION,
        command,
        family: family.label(),
        body,
    };
    serde_json::to_string_pretty(&doc).expect("report serializes")
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let err = CliError::Usage(e.to_string().lines().next().unwrap_or("").to_string());
            let _ = writeln!(stderr, "{}", err.to_json_line());
            return err.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            let _ = writeln!(stdout, "{}", out.text.trim_end());
            match out.failure {
                None => 0,
                Some(msg) => {
                    let err = CliError::Verification(msg);
                    let _ = writeln!(stderr, "{}", err.to_json_line());
                    err.exit_code()
                }
            }
        }
        Err(err) => {
            let _ = writeln!(stderr, "{}", err.to_json_line());
            err.exit_code()
        }
    }
}

struct ResolvedFamily {
    spec: DistributionSpec,
    /// Raw bytes of a tabulated family file, part of the cache key.
    source: Option<Vec<u8>>,
}

fn resolve_family(args: &FamilyArgs) -> CliResult<ResolvedFamily> {
    let (family, source) = match Family::from_name(&args.family) {
        Some(f) => (f, None),
        None => {
            let path = Path::new(&args.family);
            if !path.is_file() {
                return Err(CliError::Input(format!(
                    "unknown family {:?} (expected normal, exponential, uniform or a quantile file)",
                    args.family
                )));
            }
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
            let table: TabulatedQuantile =
                serde_json::from_slice(&bytes).map_err(|e| CliError::Parse {
                    path: path.display().to_string(),
                    line: e.line() as u64,
                    message: e.to_string(),
                })?;
            (table.into_family()?, Some(bytes))
        }
    };
    let mut spec = DistributionSpec::new(family);
    if let Some(tol) = args.quad_tol {
        spec = spec.with_tol(tol);
    }
    if let Some(points) = args.quad_points {
        spec = spec.with_points(points);
    }
    spec.validate()?;
    Ok(ResolvedFamily { spec, source })
}

fn moment_table(args: &FamilyArgs, fam: &ResolvedFamily, n: usize) -> CliResult<MomentTable> {
    if let Some(path) = &args.moments_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        let table = MomentTable::from_json(&text)?;
        if table.n != n {
            return Err(CliError::Input(format!(
                "moment table has n = {}, requested n = {n}",
                table.n
            )));
        }
        if table.family != fam.spec.family.label() {
            return Err(CliError::Input(format!(
                "moment table is for {}, requested {}",
                table.family,
                fam.spec.family.label()
            )));
        }
        return Ok(table);
    }
    let dir = if args.no_cache {
        None
    } else {
        args.cache_dir
            .clone()
            .or_else(|| std::env::var_os(cache::CACHE_DIR_ENV).map(PathBuf::from))
    };
    let (table, _) = cache::load_or_compute(dir.as_deref(), &fam.spec, n, fam.source.as_deref())?;
    Ok(table)
}

fn load_sample(args: &SampleArgs) -> CliResult<blup_core::CensoredSample> {
    ingest(
        &args.input,
        IngestOptions {
            n: args.n,
            r: args.r,
            allow_unsorted: args.allow_unsorted,
        },
    )
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn render_matrix(rows: &[Vec<f64>]) -> String {
    rows.iter()
        .map(|row| row.iter().map(|v| format!("{v:>10.4}")).collect::<String>())
        .collect::<Vec<_>>()
        .join("\n")
}

fn execute(command: &Command) -> CliResult<Output> {
    match command {
        Command::Moments {
            family,
            n,
            output,
            output_format,
        } => {
            let fam = resolve_family(family)?;
            let table = moment_table(family, &fam, *n)?;
            let json = table.to_json();
            if let Some(path) = output {
                std::fs::write(path, &json)
                    .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
            }
            let text = match output_format {
                OutputFormat::Json => json,
                OutputFormat::Table => {
                    let alpha: Vec<String> = table.alpha.iter().map(|v| fmt4(*v)).collect();
                    format!(
                        "family {}  n {}\nalpha {}\nsigma\n{}",
                        table.family,
                        table.n,
                        alpha.join(" "),
                        render_matrix(&blup_core::linalg::to_rows(&table.sigma))
                    )
                }
            };
            Ok(Output::ok(text))
        }

        Command::Estimate {
            family,
            sample,
            output_format,
        } => {
            let fam = resolve_family(family)?;
            let sample = load_sample(sample)?;
            let table = moment_table(family, &fam, sample.n)?;
            let slice = table.observed(sample.r)?;
            let result = blue(&sample, &slice)?;
            #[derive(Serialize)]
            struct Body {
                n: usize,
                r: usize,
                blue: BlueResult,
            }
            let text = match output_format {
                OutputFormat::Json => envelope(
                    "estimate",
                    &fam.spec.family,
                    Body {
                        n: sample.n,
                        r: sample.r,
                        blue: result,
                    },
                ),
                OutputFormat::Table => format!(
                    "mu_hat          {}\nsigma_hat       {}\nvar_mu_unit     {}\nvar_sigma_unit  {}\ncov_unit        {}",
                    fmt4(result.mu_hat),
                    fmt4(result.sigma_hat),
                    fmt4(result.var_mu_unit),
                    fmt4(result.var_sigma_unit),
                    fmt4(result.cov_unit)
                ),
            };
            Ok(Output::ok(text))
        }

        Command::Predict {
            family,
            sample,
            targets,
            sigma_hat_scale,
            output_format,
        } => {
            let fam = resolve_family(family)?;
            let targets = parse_targets(targets)?;
            let sample = load_sample(sample)?;
            let table = moment_table(family, &fam, sample.n)?;
            let slice = table.slice(sample.r, &targets)?;
            let set = simultaneous_blup(&sample, &slice)?;
            let text = match output_format {
                OutputFormat::Json => set.to_json(*sigma_hat_scale),
                OutputFormat::Table => set.render_table(*sigma_hat_scale),
            };
            Ok(Output::ok(text))
        }

        Command::VerifyOptimizer {
            family,
            n,
            r,
            s,
            t,
            seed,
            max_iters,
            grad_tol,
            penalty_weight,
            fail_on,
            output_format,
        } => {
            let fam = resolve_family(family)?;
            let table = moment_table(family, &fam, *n)?;
            let slice = table.slice(*r, &[*s, *t])?;
            let defaults = OptimizerConfig::default();
            let cfg = OptimizerConfig {
                max_iters: max_iters.unwrap_or(defaults.max_iters),
                grad_tol: grad_tol.unwrap_or(defaults.grad_tol),
                penalty_weight: penalty_weight.unwrap_or(defaults.penalty_weight),
                seed: *seed,
            };
            let aux = aux_quantities(&slice)?;
            let closed = closed_form_coefficients(&slice, &aux);
            let det = mspe_matrix(&slice, &aux)?.det();
            let report = numeric_det_minimizer(&slice, *s, *t, &cfg)?;
            let a: Vec<f64> = closed.row(0).iter().copied().collect();
            let b: Vec<f64> = closed.row(1).iter().copied().collect();
            let max_coefficient_difference = report
                .a
                .iter()
                .zip(&a)
                .chain(report.b.iter().zip(&b))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            let det_relative_difference = ((report.objective - det) / det).abs();
            let passed = max_coefficient_difference <= *fail_on;

            #[derive(Serialize)]
            struct ClosedForm {
                a: Vec<f64>,
                b: Vec<f64>,
                det: f64,
            }
            #[derive(Serialize)]
            struct Body {
                n: usize,
                r: usize,
                closed_form: ClosedForm,
                numeric: DetMinimizerReport,
                max_coefficient_difference: f64,
                det_relative_difference: f64,
                fail_on: f64,
                passed: bool,
            }
            let body = Body {
                n: *n,
                r: *r,
                closed_form: ClosedForm { a, b, det },
                numeric: report,
                max_coefficient_difference,
                det_relative_difference,
                fail_on: *fail_on,
                passed,
            };
            let text = match output_format {
                OutputFormat::Json => envelope("verify-optimizer", &fam.spec.family, &body),
                OutputFormat::Table => format!(
                    "closed-form det        {:.6e}\nnumeric det            {:.6e}\nmax coefficient diff   {:.3e}\nstart disagreement     {:.3e}\npassed                 {}",
                    body.closed_form.det,
                    body.numeric.objective,
                    body.max_coefficient_difference,
                    body.numeric.start_disagreement,
                    body.passed
                ),
            };
            Ok(Output {
                text,
                failure: (!passed).then(|| {
                    format!(
                        "coefficient difference {max_coefficient_difference:e} exceeds {fail_on:e}"
                    )
                }),
            })
        }

        Command::VerifyMc {
            family,
            n,
            r,
            targets,
            mu,
            sigma,
            reps,
            seed,
            fail_on,
            output_format,
        } => {
            let fam = resolve_family(family)?;
            let table = moment_table(family, &fam, *n)?;
            let cfg = MonteCarloConfig {
                mu: *mu,
                sigma: *sigma,
                n: *n,
                r: *r,
                targets: parse_targets(targets)?,
                replications: *reps,
                seed: *seed,
            };
            let report = monte_carlo_with_table(&fam.spec, &table, &cfg)?;
            let mspe_ok = report.max_relative_mspe_error <= *fail_on;
            let bias_ok = report.max_bias_z.is_none_or(|z| z <= MC_BIAS_Z_LIMIT);
            #[derive(Serialize)]
            struct Body {
                report: MonteCarloReport,
                fail_on: f64,
                bias_z_limit: f64,
                passed: bool,
            }
            let body = Body {
                fail_on: *fail_on,
                bias_z_limit: MC_BIAS_Z_LIMIT,
                passed: mspe_ok && bias_ok,
                report,
            };
            let text = match output_format {
                OutputFormat::Json => envelope("verify-mc", &fam.spec.family, &body),
                OutputFormat::Table => format!(
                    "replications           {}\nbias                   {}\nmax |bias|/SE          {}\nempirical MSPE / σ²\n{}\ntheoretical MSPE\n{}\nmax relative error     {:.4}\npassed                 {}",
                    body.report.config.replications,
                    body.report.empirical_bias.iter().map(|v| fmt4(*v)).collect::<Vec<_>>().join(" "),
                    body.report.max_bias_z.map_or("n/a".into(), |z| format!("{z:.3}")),
                    render_matrix(&body.report.empirical_mspe_unit),
                    render_matrix(&body.report.theoretical_mspe_unit),
                    body.report.max_relative_mspe_error,
                    body.passed
                ),
            };
            let failure = (!body.passed).then(|| {
                format!(
                    "relative MSPE error {:.4} (limit {fail_on}), bias z {:?} (limit {MC_BIAS_Z_LIMIT})",
                    body.report.max_relative_mspe_error, body.report.max_bias_z
                )
            });
            Ok(Output { text, failure })
        }

        Command::VerifyDominance {
            family,
            n,
            r,
            s,
            t,
            trials,
            seed,
            fail_on,
            output_format,
        } => {
            let fam = resolve_family(family)?;
            let table = moment_table(family, &fam, *n)?;
            let slice = table.slice(*r, &[*s, *t])?;
            let report = dominance_probe(&slice, *s, *t, *trials, *seed)?;
            let passed = report.max_violation <= *fail_on;
            #[derive(Serialize)]
            struct Body {
                report: DominanceReport,
                fail_on: f64,
                passed: bool,
            }
            let body = Body {
                report,
                fail_on: *fail_on,
                passed,
            };
            let text = match output_format {
                OutputFormat::Json => envelope("verify-dominance", &fam.spec.family, &body),
                OutputFormat::Table => format!(
                    "trials                 {}\nnullspace dimension    {}\nmax violation          {:.3e}\npassed                 {}",
                    body.report.trials, body.report.nullspace_dim, body.report.max_violation, body.passed
                ),
            };
            Ok(Output {
                text,
                failure: (!passed).then(|| {
                    format!(
                        "violation {:e} exceeds {fail_on:e}",
                        body.report.max_violation
                    )
                }),
            })
        }
    }
}
