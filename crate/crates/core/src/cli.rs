//! The `chimix` command-line front end.
//!
//! Every artifact starts with a header holding the tool version, the parsed
//! configuration and the seed. Wall-clock time goes to stderr, and is added to
//! the artifact only with `--record-timing` so that default outputs are
//! byte-identical across runs.
//!
//! Exit codes: 0 success, 1 a verified claim failed, 2 usage or domain error,
//! 3 numeric non-convergence.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::reconstruct::{forward_tolerance, reconstruct, ReconstructOptions};
use crate::ruben::{CoefficientVector, RubenExpansion, DEFAULT_K_MAX};
use crate::truncated_ball::{moments, sample, sample_moments, BallTruncation, SamplerConfig};
use crate::verify::{self, format_float, parse_grid, BallGrid, Claim, SlackReport, VerifyConfig};
use crate::DEFAULT_SEED;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CLAIM_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Chi-square mixtures, truncated-ball moments and their certification.
///
/// Note: `--rho` is the SQUARED radius of the ball {x : x'x < rho}.
#[derive(Debug, Parser, Serialize)]
#[command(name = "chimix", version)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: Format,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also embed the wall-clock duration in the artifact.
    #[arg(long, global = true)]
    pub record_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Mixture weights p_j, partial sums W_j and tail bounds.
    Weights(WeightsArgs),
    /// Cdf of sum a_i chi2_1 at one or more points.
    Cdf(PointArgs),
    /// Density of sum a_i chi2_1 at one or more points.
    Pdf(PointArgs),
    /// Certify a claim on a grid; exit 1 if a counterexample is found.
    Verify(VerifyArgs),
    /// Truncated moments of X_n^2 by quadrature, optionally against the sampler.
    Moments(MomentsArgs),
    /// Rejection draws from the truncated normal.
    Sample(SampleArgs),
    /// Recover lambda from truncated second moments.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct WeightsArgs {
    /// Positive coefficients a_1..a_s.
    #[arg(required = true, num_args = 1..)]
    pub a: Vec<f64>,
    /// Fixed truncation order K; otherwise chosen from --tol.
    #[arg(long)]
    pub k: Option<usize>,
    /// Tail tolerance used when --k is absent.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PointArgs {
    /// Positive coefficients a_1..a_s.
    #[arg(required = true, num_args = 1..)]
    pub a: Vec<f64>,
    /// Evaluation points (repeat or separate by commas).
    #[arg(long, required = true, value_delimiter = ',')]
    pub u: Vec<f64>,
    /// Tail tolerance of the mixture truncation.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// mu, variance, derivative, covariance, mlr-marginal, mlr-conditional,
    /// cond-mean, logconcavity, weights, remark1 or all.
    pub claim: String,
    /// Dimensions of the moment grid.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 5])]
    pub nu: Vec<usize>,
    /// Variance spreads (lambda geometric from 1 to spread).
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 100.0])]
    pub spreads: Vec<f64>,
    /// Grid of rho/sum(lambda): log:lo:hi:n, lin:lo:hi:n or a list.
    #[arg(long, default_value = "log:0.05:50:25")]
    pub rho_grid: String,
    /// Grid of t for the univariate claim.
    #[arg(long, default_value = "log:0.01:10:500")]
    pub t_grid: String,
    /// Slack tolerance; defaults depend on the claim.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed for randomized coefficient sets.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Number of coefficient sets for the mixture claims.
    #[arg(long, default_value_t = 100)]
    pub sets: usize,
    /// Parameter of the two-term density counterexample.
    #[arg(long, default_value_t = 0.5)]
    pub c2: f64,
    /// Relative finite-difference step for the derivative form.
    #[arg(long, default_value_t = verify::DEFAULT_H_REL)]
    pub h_rel: f64,
    /// Largest index for the weight inequalities.
    #[arg(long, default_value_t = 200)]
    pub k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BallArgs {
    /// Variances lambda_1..lambda_nu.
    #[arg(long, required = true, value_delimiter = ',', num_args = 1..)]
    pub lambda: Vec<f64>,
    /// Squared radius of the ball.
    #[arg(long)]
    pub rho: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub ball: BallArgs,
    /// Quadrature tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Also draw this many samples and report z-scores.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub ball: BallArgs,
    /// Number of accepted draws.
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Proposals in the acceptance probe.
    #[arg(long, default_value_t = 1_000_000)]
    pub probe: u64,
    /// Abort when the probe acceptance rate is below this.
    #[arg(long, default_value_t = 1e-6)]
    pub min_acceptance: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    /// Target second moments E(X_n^2).
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "target_file")]
    pub target: Vec<f64>,
    /// Read the target from a JSON array or a CSV vector.
    #[arg(long)]
    pub target_file: Option<PathBuf>,
    /// Squared radius of the ball.
    #[arg(long)]
    pub rho: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Initial damping exponent in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub damping: f64,
    /// Starting variances; defaults to the target.
    #[arg(long, value_delimiter = ',')]
    pub init: Option<Vec<f64>>,
}

/// Run the tool on `args` (program name first) and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    let outcome = match cli.threads {
        Some(0) => Err(Error::Domain("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli, started)),
            Err(e) => Err(Error::Domain(format!("cannot build thread pool: {e}"))),
        },
        None => execute(&cli, started),
    };
    eprintln!("chimix: finished in {:.3} s", started.elapsed().as_secs_f64());
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("chimix: error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) => EXIT_USAGE,
        Error::Convergence { .. } | Error::Quadrature { .. } | Error::Sampling(_) => EXIT_NUMERIC,
    }
}

/// A finished artifact body, before the header is attached.
enum Body {
    Json(Value),
    Csv(Vec<String>, Vec<Vec<String>>),
}

fn execute(cli: &Cli, started: Instant) -> Result<i32> {
    let (body, code) = match &cli.command {
        Command::Weights(a) => (cmd_weights(a, cli.format)?, EXIT_OK),
        Command::Cdf(a) => (cmd_points(a, cli.format, false)?, EXIT_OK),
        Command::Pdf(a) => (cmd_points(a, cli.format, true)?, EXIT_OK),
        Command::Verify(a) => cmd_verify(a, cli.format)?,
        Command::Moments(a) => (cmd_moments(a, cli.format)?, EXIT_OK),
        Command::Sample(a) => (cmd_sample(a, cli.format)?, EXIT_OK),
        Command::Reconstruct(a) => (cmd_reconstruct(a, cli.format)?, EXIT_OK),
    };
    let header = header(cli, started);
    let text = match body {
        Body::Json(result) => {
            let mut doc = header;
            doc["result"] = result;
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Domain(e.to_string()))?;
            s.push('\n');
            s
        }
        Body::Csv(columns, rows) => csv_text(&header, &columns, &rows)?,
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(code)
}

fn header(cli: &Cli, started: Instant) -> Value {
    let seed = match &cli.command {
        Command::Verify(a) => Some(a.seed),
        Command::Moments(a) => Some(a.seed),
        Command::Sample(a) => Some(a.seed),
        _ => None,
    };
    let mut config = serde_json::to_value(cli).unwrap_or(Value::Null);
    // Thread count and output location do not influence the artifact content.
    if let Value::Object(map) = &mut config {
        map.remove("threads");
        map.remove("out");
    }
    let mut doc = json!({
        "tool": "chimix",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "seed": seed.unwrap_or(DEFAULT_SEED),
    });
    if cli.record_timing {
        doc["duration_seconds"] = json!(started.elapsed().as_secs_f64());
    }
    doc
}

fn csv_text(header: &Value, columns: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut out = String::new();
    for key in ["tool", "version", "seed", "duration_seconds", "config"] {
        if let Some(v) = header.get(key) {
            out.push_str(&format!("# {key}: {v}\n"));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Domain(format!("csv: {e}"));
    w.write_record(columns).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(format!("csv: {e}")))?;
    out.push_str(&String::from_utf8_lossy(&bytes));
    Ok(out)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let io_err = |e: io::Error| Error::Domain(format!("cannot write output: {e}"));
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).map_err(io_err)?);
            f.write_all(text.as_bytes()).map_err(io_err)?;
            f.flush().map_err(io_err)
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(io_err)?;
            out.flush().map_err(io_err)
        }
    }
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn f(x: f64) -> String {
    format_float(x)
}

fn cmd_weights(a: &WeightsArgs, format: Format) -> Result<Body> {
    let cv = CoefficientVector::normalize(&a.a)?;
    let exp = match a.k {
        Some(k) => RubenExpansion::with_order(&cv, k),
        None => RubenExpansion::with_tolerance(&cv, a.tol, DEFAULT_K_MAX)?,
    };
    let rows: Vec<(usize, f64, f64)> =
        exp.p().iter().zip(exp.w()).enumerate().map(|(j, (p, w))| (j, *p, *w)).collect();
    Ok(match format {
        Format::Json => Body::Json(json!({
            "coefficients": cv.coefficients(),
            "scale": cv.scale(),
            "c": exp.c(),
            "log_p0": exp.log_p0(),
            "k": exp.k_trunc(),
            "tail": exp.tail(),
            "rows": rows.iter().map(|(j, p, w)| json!({"j": j, "p": p, "w": w, "tail_bound": (1.0 - w).max(0.0)})).collect::<Vec<_>>(),
        })),
        Format::Csv => Body::Csv(
            cols(&["j", "p", "w", "tail_bound"]),
            rows.iter().map(|(j, p, w)| vec![j.to_string(), f(*p), f(*w), f((1.0 - w).max(0.0))]).collect(),
        ),
    })
}

fn cmd_points(a: &PointArgs, format: Format, density: bool) -> Result<Body> {
    let cv = CoefficientVector::normalize(&a.a)?;
    let exp = RubenExpansion::with_tolerance(&cv, a.tol, DEFAULT_K_MAX)?;
    if density {
        let values: Vec<f64> = a.u.iter().map(|u| exp.pdf(*u)).collect::<Result<_>>()?;
        return Ok(match format {
            Format::Json => Body::Json(json!({
                "k": exp.k_trunc(),
                "points": a.u.iter().zip(&values).map(|(u, v)| json!({"u": u, "pdf": v})).collect::<Vec<_>>(),
            })),
            Format::Csv => Body::Csv(cols(&["u", "pdf"]), a.u.iter().zip(&values).map(|(u, v)| vec![f(*u), f(*v)]).collect()),
        });
    }
    let values: Vec<_> = a.u.iter().map(|u| exp.cdf(*u)).collect::<Result<_>>()?;
    Ok(match format {
        Format::Json => Body::Json(json!({
            "k": exp.k_trunc(),
            "tail": exp.tail(),
            "points": a.u.iter().zip(&values).map(|(u, v)| json!({"u": u, "cdf": v.value, "error_bound": v.error_bound})).collect::<Vec<_>>(),
        })),
        Format::Csv => Body::Csv(
            cols(&["u", "cdf", "error_bound"]),
            a.u.iter().zip(&values).map(|(u, v)| vec![f(*u), f(v.value), f(v.error_bound)]).collect(),
        ),
    })
}

fn verify_config(a: &VerifyArgs) -> Result<VerifyConfig> {
    if let Some(t) = a.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("--tol must lie in (0, 1), got {t}")));
        }
    }
    Ok(VerifyConfig {
        grid: BallGrid { nus: a.nu.clone(), spreads: a.spreads.clone(), rho_ratios: parse_grid(&a.rho_grid)? },
        tol: a.tol,
        seed: a.seed,
        sets: a.sets,
        c2: a.c2,
        h_rel: a.h_rel,
        k: a.k,
        t_grid: parse_grid(&a.t_grid)?,
    })
}

fn cmd_verify(a: &VerifyArgs, format: Format) -> Result<(Body, i32)> {
    let claim: Claim = a.claim.parse()?;
    let reports = verify::run(claim, &verify_config(a)?)?;
    let passed = reports.iter().all(|r| r.passed);
    let code = if passed { EXIT_OK } else { EXIT_CLAIM_FAILED };
    let body = match format {
        Format::Json => Body::Json(json!({"passed": passed, "reports": reports})),
        Format::Csv => report_csv(&reports),
    };
    Ok((body, code))
}

fn report_csv(reports: &[SlackReport]) -> Body {
    if let [single] = reports {
        let mut columns = cols(&["claim", "index", "family"]);
        columns.extend(single.axes.iter().cloned());
        columns.push("slack".into());
        let rows = single
            .points
            .iter()
            .map(|p| {
                let mut row = vec![single.claim.clone(), p.index.to_string(), p.family.clone()];
                row.extend(p.coords.iter().map(|c| f(*c)));
                row.push(f(p.slack));
                row
            })
            .collect();
        return Body::Csv(columns, rows);
    }
    let rows = reports
        .iter()
        .flat_map(|r| {
            r.points.iter().map(move |p| {
                let coords: Vec<String> = r.axes.iter().zip(&p.coords).map(|(a, c)| format!("{a}={}", f(*c))).collect();
                vec![r.claim.clone(), p.index.to_string(), p.family.clone(), coords.join(";"), f(p.slack)]
            })
        })
        .collect();
    Body::Csv(cols(&["claim", "index", "family", "coords", "slack"]), rows)
}

fn cmd_moments(a: &MomentsArgs, format: Format) -> Result<Body> {
    let bt = BallTruncation::new(&a.ball.lambda, a.ball.rho)?;
    let report = moments(&bt, a.tol)?;
    let empirical = match a.n {
        Some(n) => Some(sample_moments(&bt, n, a.seed, &SamplerConfig::default())?),
        None => None,
    };
    let nu = bt.nu();
    let mut rows = Vec::new();
    for n in 0..nu {
        rows.push(("second", n, n, report.second[n], empirical.as_ref().map(|e| (e.second[n], e.second_se[n]))));
        rows.push(("mass", n, n, report.mass[n], None));
    }
    for n in 0..nu {
        for m in 0..nu {
            rows.push(("cov_sq", n, m, report.cov_sq[n][m], empirical.as_ref().map(|e| (e.cov_sq[n][m], e.cov_sq_se[n][m]))));
        }
    }
    Ok(match format {
        Format::Json => {
            let z = empirical.as_ref().map(|e| {
                let second: Vec<f64> = (0..nu).map(|n| (e.second[n] - report.second[n]) / e.second_se[n]).collect();
                let cov: Vec<Vec<f64>> = (0..nu)
                    .map(|n| (0..nu).map(|m| (e.cov_sq[n][m] - report.cov_sq[n][m]) / e.cov_sq_se[n][m]).collect())
                    .collect();
                json!({"second": second, "cov_sq": cov})
            });
            Body::Json(json!({
                "lambda": bt.lambda(),
                "rho": bt.rho(),
                "k_norm": bt.k_norm(),
                "moments": report,
                "empirical": empirical,
                "z_scores": z,
            }))
        }
        Format::Csv => Body::Csv(
            cols(&["quantity", "n", "m", "quadrature", "empirical", "standard_error"]),
            rows.into_iter()
                .map(|(q, n, m, v, e)| {
                    let (ev, se) = e.map(|(x, s)| (f(x), f(s))).unwrap_or_default();
                    vec![q.to_string(), n.to_string(), m.to_string(), f(v), ev, se]
                })
                .collect(),
        ),
    })
}

fn cmd_sample(a: &SampleArgs, format: Format) -> Result<Body> {
    let bt = BallTruncation::new(&a.ball.lambda, a.ball.rho)?;
    let cfg = SamplerConfig { probe: a.probe, min_acceptance: a.min_acceptance, ..Default::default() };
    let out = sample(&bt, a.n, a.seed, &cfg)?;
    Ok(match format {
        Format::Json => Body::Json(json!({"draws": out.draws, "moments": out.moments})),
        Format::Csv => {
            let columns = (1..=bt.nu()).map(|i| format!("x{i}")).collect();
            Body::Csv(columns, out.draws.iter().map(|x| x.iter().map(|v| f(*v)).collect()).collect())
        }
    })
}

/// A target vector from a JSON array or from CSV numbers (one row or one column).
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(v);
    }
    let mut out = Vec::new();
    let mut r = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).flexible(true).from_reader(text.as_bytes());
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Domain(format!("cannot parse {}: {e}", path.display())))?;
        for field in rec.iter().map(str::trim).filter(|s| !s.is_empty()) {
            out.push(field.parse().map_err(|_| Error::Domain(format!("not a number in {}: '{field}'", path.display())))?);
        }
    }
    Ok(out)
}

fn cmd_reconstruct(a: &ReconstructArgs, format: Format) -> Result<Body> {
    let target = match &a.target_file {
        Some(p) => read_vector(p)?,
        None => a.target.clone(),
    };
    let opts = ReconstructOptions { tol: a.tol, max_iter: a.max_iter, damping: a.damping, init: a.init.clone() };
    let result = reconstruct(&target, a.rho, &opts)?;
    Ok(match format {
        Format::Json => Body::Json(json!({
            "target": target,
            "rho": a.rho,
            "forward_tolerance": forward_tolerance(a.tol),
            "reconstruction": result,
        })),
        Format::Csv => {
            let mut rows: Vec<Vec<String>> =
                result.lambda_hat.iter().enumerate().map(|(n, l)| vec!["lambda_hat".into(), n.to_string(), f(*l)]).collect();
            rows.extend(result.residual_trace.iter().enumerate().map(|(i, r)| vec!["residual".into(), i.to_string(), f(*r)]));
            rows.push(vec!["converged".into(), "0".into(), if result.converged { "1" } else { "0" }.into()]);
            rows.push(vec!["iterations".into(), "0".into(), result.iterations.to_string()]);
            rows.push(vec!["damping".into(), "0".into(), f(result.damping)]);
            Body::Csv(cols(&["quantity", "index", "value"]), rows)
        }
    })
}
