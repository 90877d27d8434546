//! The `estimate`, `simulate` and `evaluate` commands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use twoview_core::residuals::residual_ligt;
use twoview_core::robust::gnc::lower_median;
use twoview_core::robust::{GncConfig, RansacConfig};
use twoview_core::simlab::{monte_carlo, run_estimator, Estimator, MetricsTable};

use crate::config::parse_experiment;
use crate::error::{read_file, write_file, CliError, CliResult};
use crate::io::{load_intrinsics, load_pose, parse_matches};
use crate::report::{
    pose_metrics, sha256_hex, Diagnostics, ErrorInfo, EvaluatedPair, Evaluation, Metadata, PairJson, PoseJson, Report,
    Timing, REPORT_SCHEMA_VERSION, RESIDUALS_MAGIC, SIMULATE_MAGIC, TOOL,
};

pub const DEFAULT_MIN_MATCHES: usize = 30;

#[derive(Debug, Clone)]
pub struct EstimateArgs {
    pub matches: PathBuf,
    pub intrinsics: Option<PathBuf>,
    pub method: Estimator,
    pub seed: u64,
    pub theta: Option<f64>,
    pub sample_size: Option<usize>,
    pub iterations: Option<usize>,
    pub min_matches: usize,
    pub truth: Option<PathBuf>,
    pub out: PathBuf,
    pub residuals: Option<PathBuf>,
}

/// Settings that determine an estimate; hashed into the report.
#[derive(Serialize)]
struct EstimateSettings<'a> {
    method: &'a str,
    seed: u64,
    min_matches: usize,
    intrinsics: Option<Vec<f64>>,
    ransac: &'a RansacConfig,
}

fn ransac_config(args: &EstimateArgs) -> CliResult<RansacConfig> {
    let defaults = RansacConfig::default();
    let config = RansacConfig {
        sample_size: args.sample_size.unwrap_or(defaults.sample_size),
        max_iterations: args.iterations.unwrap_or(defaults.max_iterations),
        inlier_threshold: args.theta.unwrap_or(defaults.inlier_threshold),
        seed: args.seed,
        gnc: GncConfig::default(),
    };
    if config.sample_size < 6 {
        return Err(CliError::config("ns", "sample size must be at least 6"));
    }
    if config.max_iterations == 0 {
        return Err(CliError::config("iters", "must be positive"));
    }
    if !(config.inlier_threshold.is_finite() && config.inlier_threshold > 0.0) {
        return Err(CliError::config("theta", "must be positive and finite"));
    }
    Ok(config)
}

fn error_info(e: &CliError) -> ErrorInfo {
    ErrorInfo {
        kind: e.kind().to_string(),
        message: e.to_string(),
    }
}

/// Runs `estimate`. A report is written whenever the arguments are valid;
/// the returned error carries the exit code.
pub fn cmd_estimate(args: &EstimateArgs) -> CliResult<Report> {
    let start = Instant::now();
    let ransac = ransac_config(args)?;
    let intrinsics = args.intrinsics.as_deref().map(load_intrinsics).transpose()?;
    let settings = EstimateSettings {
        method: args.method.as_str(),
        seed: args.seed,
        min_matches: args.min_matches,
        intrinsics: intrinsics.map(|k| k.transpose().as_slice().to_vec()),
        ransac: &ransac,
    };
    let config_json = serde_json::to_string(&settings).expect("settings serialize");
    let text = read_file(&args.matches);
    let mut report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        metadata: Metadata {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: "estimate".to_string(),
            method: args.method.as_str().to_string(),
            seed: args.seed,
            config_sha256: sha256_hex(config_json.as_bytes()),
            matches_sha256: text.as_ref().ok().map(|t| sha256_hex(t.as_bytes())),
        },
        status: "ok".to_string(),
        error: None,
        pose: None,
        pairs: Vec::new(),
        n_inliers: 0,
        diagnostics: None,
        metrics: None,
        timing: Timing { elapsed_ms: 0.0 },
    };

    let result = text.and_then(|text| run_estimate(args, &text, intrinsics.as_ref(), &ransac, &mut report));
    report.timing.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    if let Err(e) = &result {
        report.status = "error".to_string();
        report.error = Some(error_info(e));
    }
    write_file(&args.out, &to_json(&report))?;
    if let (Some(path), Ok(())) = (&args.residuals, &result) {
        write_file(path, &format_residuals(&report.pairs))?;
    }
    result.map(|()| report)
}

fn run_estimate(
    args: &EstimateArgs,
    text: &str,
    intrinsics: Option<&twoview_core::geometry::Mat3>,
    ransac: &RansacConfig,
    report: &mut Report,
) -> CliResult<()> {
    let pairs = parse_matches(&args.matches, text, intrinsics)?;
    if pairs.len() < args.min_matches {
        return Err(CliError::TooFewMatches {
            found: pairs.len(),
            required: args.min_matches,
        });
    }
    let truth = args.truth.as_deref().map(load_pose).transpose()?;
    if args.method == Estimator::LirpReference && truth.is_none() {
        return Err(CliError::config("truth", "lirp-reference needs a ground-truth pose"));
    }
    let estimate = run_estimator(args.method, &pairs, &ransac.gnc, ransac, truth.as_ref())?;
    report.pose = Some(PoseJson::from_pose(&estimate.pose));
    report.pairs = pairs
        .iter()
        .zip(&estimate.inliers)
        .enumerate()
        .map(|(index, (pair, &inlier))| PairJson {
            index,
            inlier,
            residual_ligt: residual_ligt(&estimate.pose, pair),
        })
        .collect();
    report.n_inliers = estimate.inliers.iter().filter(|&&f| f).count();
    report.diagnostics = Some(Diagnostics { d_min: estimate.d_min });
    report.metrics = truth.map(|t| pose_metrics(&t, &estimate.pose));
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn format_residuals(pairs: &[PairJson]) -> String {
    let mut out = format!("{RESIDUALS_MAGIC}\nindex,inlier,residual_ligt\n");
    for p in pairs {
        let _ = writeln!(out, "{},{},{}", p.index, u8::from(p.inlier), p.residual_ligt);
    }
    out
}

pub const SIMULATE_COLUMNS: &str = "scene_kind,n_points,noise_px,outlier_fraction,estimator,n_trials,failures,\
mean_error_deg,median_error_deg,dmin_mean,dmin_median,dmin_min,precision,recall,mean_runtime_ms";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders a metrics table as CSV. Undefined statistics are empty fields.
pub fn format_metrics(table: &MetricsTable, config_sha256: &str) -> String {
    let mut out = format!("{SIMULATE_MAGIC} config_sha256={config_sha256}\n{SIMULATE_COLUMNS}\n");
    for m in &table.cells {
        let c = &m.cell;
        let d = m.d_min_samples();
        let d_mean = (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64);
        let d_min = d.iter().copied().reduce(f64::min);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.scene_kind.as_str(),
            c.n_points,
            c.noise_px,
            c.outlier_fraction,
            c.estimator.as_str(),
            m.trials.len(),
            m.failures(),
            m.mean_error(),
            m.median_error(),
            opt(d_mean),
            opt(lower_median(&d)),
            opt(d_min),
            opt(m.precision()),
            opt(m.recall()),
            m.mean_runtime_ms(),
        );
    }
    out
}

pub fn cmd_simulate(config: &Path, out: &Path) -> CliResult<MetricsTable> {
    let experiment = parse_experiment(&read_file(config)?)?;
    let canonical = serde_json::to_string(&experiment).expect("experiment serializes");
    let table = monte_carlo(&experiment)?;
    write_file(out, &format_metrics(&table, &sha256_hex(canonical.as_bytes())))?;
    Ok(table)
}

fn load_report(path: &Path) -> CliResult<Report> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Compares each report's pose with the matching truth file.
pub fn cmd_evaluate(reports: &[PathBuf], truths: &[PathBuf], out: Option<&Path>) -> CliResult<Evaluation> {
    if reports.len() != truths.len() || reports.is_empty() {
        return Err(CliError::DimensionMismatch(format!(
            "{} reports but {} truth files",
            reports.len(),
            truths.len()
        )));
    }
    let mut pairs = Vec::with_capacity(reports.len());
    for (report_path, truth_path) in reports.iter().zip(truths) {
        let report = load_report(report_path)?;
        let truth = load_pose(truth_path)?;
        let estimate = report.pose.as_ref().and_then(PoseJson::to_pose).ok_or_else(|| {
            CliError::DimensionMismatch(format!(
                "{} holds no 3x3 rotation and 3-vector translation",
                report_path.display()
            ))
        })?;
        let m = pose_metrics(&truth, &estimate);
        pairs.push(EvaluatedPair {
            report: report_path.display().to_string(),
            truth: truth_path.display().to_string(),
            rotation_error_deg: m.rotation_error_deg,
            translation_error_deg: m.translation_error_deg,
        });
    }
    let errors: Vec<f64> = pairs.iter().map(|p| p.rotation_error_deg).collect();
    let evaluation = Evaluation {
        schema_version: REPORT_SCHEMA_VERSION,
        mean_error_deg: errors.iter().sum::<f64>() / errors.len() as f64,
        median_error_deg: lower_median(&errors).unwrap_or(f64::NAN),
        pairs,
    };
    let json = to_json(&evaluation);
    match out {
        Some(path) => write_file(path, &json)?,
        None => print!("{json}"),
    }
    Ok(evaluation)
}
