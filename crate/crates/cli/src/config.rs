//! Flat TOML experiment configuration for `simulate`.
//!
//! ```toml
//! schema_version = 1
//! seed = 7
//! n_trials = 500
//! scene_kinds = ["planar", "normal"]
//! n_points = [30]
//! noise_px = [0.0, 0.1]
//! outlier_fractions = [0.0]
//! estimators = ["lirp"]
//! ```
//!
//! Every other key is optional and defaults to the library defaults; unknown
//! keys are rejected.

use toml::{Table, Value};
use twoview_core::robust::{GncConfig, MuSchedule, RansacConfig, ScaleRule};
use twoview_core::simlab::{Estimator, Experiment, SceneConfig, SceneKind};

use crate::error::{CliError, CliResult};

pub const CONFIG_SCHEMA_VERSION: i64 = 1;

const KNOWN_KEYS: &[&str] = &[
    "schema_version",
    "seed",
    "n_trials",
    "scene_kinds",
    "n_points",
    "noise_px",
    "outlier_fractions",
    "estimators",
    "depth_min",
    "depth_max",
    "max_translation",
    "rotation_perturbation_deg",
    "focal_px",
    "sample_size",
    "ransac_iterations",
    "inlier_threshold",
    "gnc_stop_epsilon",
    "gnc_max_iterations",
    "gnc_mu0",
    "gnc_schedule",
    "gnc_schedule_factor",
    "gnc_scale_rule",
];

struct Fields {
    table: Table,
}

impl Fields {
    fn f64(&self, key: &str, default: f64) -> CliResult<f64> {
        match self.table.get(key) {
            None => Ok(default),
            Some(v) => as_f64(key, v),
        }
    }

    fn usize(&self, key: &str, default: usize) -> CliResult<usize> {
        match self.table.get(key) {
            None => Ok(default),
            Some(v) => as_usize(key, v),
        }
    }

    fn str(&self, key: &str) -> CliResult<Option<&str>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(CliError::config(key, "expected a string")),
        }
    }

    fn array<T>(&self, key: &str, default: Vec<T>, item: impl Fn(&str, &Value) -> CliResult<T>) -> CliResult<Vec<T>> {
        match self.table.get(key) {
            None => Ok(default),
            Some(Value::Array(values)) => values
                .iter()
                .enumerate()
                .map(|(i, v)| item(&format!("{key}[{i}]"), v))
                .collect(),
            Some(_) => Err(CliError::config(key, "expected an array")),
        }
    }
}

fn as_f64(key: &str, v: &Value) -> CliResult<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(CliError::config(key, "expected a number")),
    }
}

fn as_usize(key: &str, v: &Value) -> CliResult<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(CliError::config(key, "expected a nonnegative integer")),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> CliResult<&'a str> {
    v.as_str().ok_or_else(|| CliError::config(key, "expected a string"))
}

/// Parses and validates a configuration document.
pub fn parse_experiment(text: &str) -> CliResult<Experiment> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config("<document>", e.message().to_string()))?;
    if let Some(key) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(CliError::config(key.as_str(), "unknown key"));
    }
    let f = Fields { table };

    match f.table.get("schema_version") {
        Some(Value::Integer(CONFIG_SCHEMA_VERSION)) => {}
        Some(_) => {
            return Err(CliError::config(
                "schema_version",
                format!("only version {CONFIG_SCHEMA_VERSION} is supported"),
            ))
        }
        None => return Err(CliError::config("schema_version", "missing")),
    }

    let seed = match f.table.get("seed") {
        None => 0,
        Some(Value::Integer(i)) if *i >= 0 => *i as u64,
        Some(_) => return Err(CliError::config("seed", "expected a nonnegative integer")),
    };

    let scene_defaults = SceneConfig::default();
    let scene = SceneConfig {
        depth_min: f.f64("depth_min", scene_defaults.depth_min)?,
        depth_max: f.f64("depth_max", scene_defaults.depth_max)?,
        max_translation: f.f64("max_translation", scene_defaults.max_translation)?,
        rotation_perturbation_deg: f.f64("rotation_perturbation_deg", scene_defaults.rotation_perturbation_deg)?,
        focal_px: f.f64("focal_px", scene_defaults.focal_px)?,
        ..scene_defaults
    };

    let gnc_defaults = GncConfig::default();
    let schedule = match f.str("gnc_schedule")? {
        None | Some("geometric") => MuSchedule::Geometric {
            factor: f.f64("gnc_schedule_factor", 1.4)?,
        },
        Some("superlinear") => MuSchedule::Superlinear {
            exponent: f.f64("gnc_schedule_factor", 1.4)?,
        },
        Some(other) => return Err(CliError::config("gnc_schedule", format!("unknown schedule `{other}`"))),
    };
    let scale_rule = match f.str("gnc_scale_rule")? {
        None | Some("mad") => ScaleRule::Mad,
        Some("median-abs") => ScaleRule::MedianAbs,
        Some(other) => return Err(CliError::config("gnc_scale_rule", format!("unknown rule `{other}`"))),
    };
    let gnc = GncConfig {
        stop_epsilon: f.f64("gnc_stop_epsilon", gnc_defaults.stop_epsilon)?,
        max_iterations: f.usize("gnc_max_iterations", gnc_defaults.max_iterations)?,
        mu0: f.f64("gnc_mu0", gnc_defaults.mu0)?,
        schedule,
        scale_rule,
        record_trace: false,
    };
    let ransac_defaults = RansacConfig::default();
    let ransac = RansacConfig {
        sample_size: f.usize("sample_size", ransac_defaults.sample_size)?,
        max_iterations: f.usize("ransac_iterations", ransac_defaults.max_iterations)?,
        inlier_threshold: f.f64("inlier_threshold", ransac_defaults.inlier_threshold)?,
        seed: 0,
        gnc,
    };

    let experiment = Experiment {
        seed,
        n_trials: f.usize("n_trials", 100)?,
        scene,
        scene_kinds: f.array("scene_kinds", vec![SceneKind::Normal], |k, v| {
            as_str(k, v)?
                .parse::<SceneKind>()
                .map_err(|e| CliError::config("scene_kind", e))
        })?,
        n_points: f.array("n_points", vec![30], as_usize)?,
        noise_px: f.array("noise_px", vec![0.0], as_f64)?,
        outlier_fractions: f.array("outlier_fractions", vec![0.0], as_f64)?,
        estimators: f.array("estimators", vec![Estimator::Lirp], |k, v| {
            as_str(k, v)?
                .parse::<Estimator>()
                .map_err(|e| CliError::config("estimator", e))
        })?,
        gnc,
        ransac,
    };
    experiment.validate().map_err(|e| match e {
        twoview_core::Error::InvalidConfig { field, reason } => CliError::config(field, reason),
        other => CliError::config("<document>", other.to_string()),
    })?;
    Ok(experiment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(text: &str) -> String {
        match parse_experiment(text) {
            Err(CliError::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_uses_defaults() {
        let e = parse_experiment("schema_version = 1\n").unwrap();
        assert_eq!(e.scene, SceneConfig::default());
        assert_eq!(e.ransac, RansacConfig::default());
        assert_eq!(e.estimators, vec![Estimator::Lirp]);
    }

    #[test]
    fn unknown_scene_kind_names_the_field() {
        assert_eq!(
            field_of("schema_version = 1\nscene_kinds = [\"curved\"]\n"),
            "scene_kind"
        );
        assert_eq!(field_of("schema_version = 1\nestimators = [\"8pt\"]\n"), "estimator");
    }

    #[test]
    fn structural_errors_name_the_field() {
        assert_eq!(field_of("seed = 1\n"), "schema_version");
        assert_eq!(field_of("schema_version = 2\n"), "schema_version");
        assert_eq!(field_of("schema_version = 1\nbogus = 3\n"), "bogus");
        assert_eq!(field_of("schema_version = 1\nnoise_px = [\"a\"]\n"), "noise_px[0]");
        assert_eq!(field_of("schema_version = 1\nn_trials = 0\n"), "n_trials");
        assert_eq!(field_of("schema_version = 1\nsample_size = 3\n"), "sample_size");
        assert_eq!(
            field_of("schema_version = 1\noutlier_fractions = [1.5]\n"),
            "outlier_fractions"
        );
    }

    #[test]
    fn empty_axes_are_allowed() {
        let e = parse_experiment("schema_version = 1\nnoise_px = []\n").unwrap();
        assert!(e.cells().is_empty());
    }
}
