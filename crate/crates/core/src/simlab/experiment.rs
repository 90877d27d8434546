//! Monte Carlo sweeps over scene, corruption and estimator settings.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scene::{corrupt_matches, generate_scene, Label, SceneConfig, SceneKind};
use crate::error::{Error, Result};
use crate::geometry::{compose_essential, rotation_angular_error, BearingPair, RelativePose};
use crate::lirp::{lirp_solve, lirp_solve_with_reference};
use crate::robust::ransac::ligt_inliers;
use crate::robust::{gnc_irls, gnc_ransac, refine_ligt, GncConfig, RansacConfig};
use crate::seeding::{mix_seed, splitmix64};

/// Error recorded for a trial whose estimator failed.
pub const FAILURE_ERROR_DEG: f64 = 180.0;
/// GNC weights at or above this value count as predicted inliers.
pub const GNC_INLIER_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Unweighted LiRP with PPO-based identification.
    Lirp,
    /// LiRP candidates identified with the true essential matrix; isolates
    /// candidate generation from identification.
    LirpReference,
    GncIrls,
    GncRansac,
    /// GNC-RANSAC followed by LiGT refinement on its inliers.
    LigtRefine,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Lirp => "lirp",
            Estimator::LirpReference => "lirp-reference",
            Estimator::GncIrls => "gnc-irls",
            Estimator::GncRansac => "gnc-ransac",
            Estimator::LigtRefine => "ligt-refine",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "lirp" => Ok(Estimator::Lirp),
            "lirp-reference" => Ok(Estimator::LirpReference),
            "gnc-irls" => Ok(Estimator::GncIrls),
            "gnc-ransac" => Ok(Estimator::GncRansac),
            "ligt-refine" => Ok(Estimator::LigtRefine),
            other => Err(format!("unknown estimator `{other}`")),
        }
    }
}

/// Output of one estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub pose: RelativePose,
    /// Per-pair inlier prediction.
    pub inliers: Vec<bool>,
    pub d_min: f64,
}

fn flags(n: usize, idx: &[usize]) -> Vec<bool> {
    let mut f = vec![false; n];
    for &i in idx {
        f[i] = true;
    }
    f
}

/// Runs `estimator` on `pairs`. `reference` is the true pose, needed only by
/// [`Estimator::LirpReference`].
pub fn run_estimator(
    estimator: Estimator,
    pairs: &[BearingPair],
    gnc: &GncConfig,
    ransac: &RansacConfig,
    reference: Option<&RelativePose>,
) -> Result<Estimate> {
    let n = pairs.len();
    let threshold = ransac.inlier_threshold;
    let by_threshold = |pose: &RelativePose| flags(n, &ligt_inliers(pose, pairs, threshold));
    match estimator {
        Estimator::Lirp => {
            let (pose, diag) = lirp_solve(pairs, None)?;
            Ok(Estimate {
                inliers: by_threshold(&pose),
                pose,
                d_min: diag.d_min,
            })
        }
        Estimator::LirpReference => {
            let reference = reference.ok_or(Error::InvalidConfig {
                field: "estimator",
                reason: "lirp-reference needs the true pose".into(),
            })?;
            let (pose, diag) = lirp_solve_with_reference(pairs, None, &compose_essential(reference))?;
            Ok(Estimate {
                inliers: by_threshold(&pose),
                pose,
                d_min: diag.d_min,
            })
        }
        Estimator::GncIrls => {
            let (pose, state) = gnc_irls(pairs, gnc)?;
            let inliers = state.weights.iter().map(|&w| w >= GNC_INLIER_WEIGHT).collect();
            Ok(Estimate {
                pose,
                inliers,
                d_min: state.d_min,
            })
        }
        Estimator::GncRansac => {
            let out = gnc_ransac(pairs, ransac)?;
            Ok(Estimate {
                pose: out.pose,
                inliers: flags(n, &out.inliers),
                d_min: out.d_min,
            })
        }
        Estimator::LigtRefine => {
            let out = gnc_ransac(pairs, ransac)?;
            let weights: Vec<f64> = flags(n, &out.inliers)
                .into_iter()
                .map(|f| if f { 1.0 } else { 0.0 })
                .collect();
            let refined = refine_ligt(&out.pose, pairs, Some(&weights));
            Ok(Estimate {
                pose: refined.pose,
                inliers: flags(n, &out.inliers),
                d_min: out.d_min,
            })
        }
    }
}

/// A sweep: the Cartesian product of the axes, each cell run `n_trials` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiment {
    pub seed: u64,
    pub n_trials: usize,
    /// Base scene settings; `kind`, `n_points` and `seed` are set per cell.
    pub scene: SceneConfig,
    pub scene_kinds: Vec<SceneKind>,
    pub n_points: Vec<usize>,
    pub noise_px: Vec<f64>,
    pub outlier_fractions: Vec<f64>,
    pub estimators: Vec<Estimator>,
    pub gnc: GncConfig,
    /// RANSAC settings; the seed is replaced by a per-trial seed.
    pub ransac: RansacConfig,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            seed: 0,
            n_trials: 100,
            scene: SceneConfig::default(),
            scene_kinds: vec![SceneKind::Normal],
            n_points: vec![30],
            noise_px: vec![0.0],
            outlier_fractions: vec![0.0],
            estimators: vec![Estimator::Lirp],
            gnc: GncConfig::default(),
            ransac: RansacConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub scene_kind: SceneKind,
    pub n_points: usize,
    pub noise_px: f64,
    pub outlier_fraction: f64,
    pub estimator: Estimator,
}

impl GridCell {
    /// Stream key of the cell's data. It depends on the data parameters only,
    /// so estimators in the same sweep see identical trials and adding or
    /// reordering grid values never changes another cell's draws.
    pub fn data_key(&self, seed: u64) -> u64 {
        let kind = match self.scene_kind {
            SceneKind::Normal => 1,
            SceneKind::Planar => 2,
        };
        [
            kind,
            self.n_points as u64,
            self.noise_px.to_bits(),
            self.outlier_fraction.to_bits(),
        ]
        .into_iter()
        .fold(splitmix64(seed), |acc, part| splitmix64(acc ^ part))
    }
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig {
                field: "n_trials",
                reason: "must be at least 1".into(),
            });
        }
        for &n in &self.n_points {
            SceneConfig {
                n_points: n,
                ..self.scene
            }
            .validate()?;
        }
        if self.n_points.is_empty() {
            self.scene.validate()?;
        }
        for &s in &self.noise_px {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidConfig {
                    field: "noise_px",
                    reason: format!("noise must be finite and nonnegative, got {s}"),
                });
            }
        }
        for &f in &self.outlier_fractions {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::InvalidConfig {
                    field: "outlier_fractions",
                    reason: format!("fraction must lie in [0, 1), got {f}"),
                });
            }
        }
        self.gnc.validate()?;
        self.ransac.validate()
    }

    /// Cells in axis order: scene kind, points, noise, outlier fraction,
    /// estimator (last varies fastest).
    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::new();
        for &scene_kind in &self.scene_kinds {
            for &n_points in &self.n_points {
                for &noise_px in &self.noise_px {
                    for &outlier_fraction in &self.outlier_fractions {
                        for &estimator in &self.estimators {
                            out.push(GridCell {
                                scene_kind,
                                n_points,
                                noise_px,
                                outlier_fraction,
                                estimator,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub rotation_error_deg: f64,
    /// `None` when the estimator failed.
    pub d_min: Option<f64>,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub runtime_ms: f64,
    pub error: Option<Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub cell: GridCell,
    pub trials: Vec<TrialRecord>,
}

impl CellMetrics {
    pub fn rotation_errors(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.rotation_error_deg).collect()
    }

    pub fn mean_error(&self) -> f64 {
        mean(&self.rotation_errors())
    }

    /// Lower-middle median, matching the scale estimate convention.
    pub fn median_error(&self) -> f64 {
        crate::robust::gnc::lower_median(&self.rotation_errors()).unwrap_or(f64::NAN)
    }

    pub fn failures(&self) -> usize {
        self.trials.iter().filter(|t| t.error.is_some()).count()
    }

    pub fn d_min_samples(&self) -> Vec<f64> {
        self.trials.iter().filter_map(|t| t.d_min).collect()
    }

    /// Micro-averaged precision; `None` when nothing was predicted as inlier.
    pub fn precision(&self) -> Option<f64> {
        let tp: usize = self.trials.iter().map(|t| t.true_positives).sum();
        let fp: usize = self.trials.iter().map(|t| t.false_positives).sum();
        (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64)
    }

    /// Micro-averaged recall; `None` when there were no true inliers.
    pub fn recall(&self) -> Option<f64> {
        let tp: usize = self.trials.iter().map(|t| t.true_positives).sum();
        let fn_: usize = self.trials.iter().map(|t| t.false_negatives).sum();
        (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64)
    }

    pub fn mean_runtime_ms(&self) -> f64 {
        mean(&self.trials.iter().map(|t| t.runtime_ms).collect::<Vec<_>>())
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    pub cells: Vec<CellMetrics>,
}

/// Counts `(tp, fp, fn)` of a prediction against ground-truth labels.
pub fn confusion(predicted: &[bool], labels: &[Label]) -> (usize, usize, usize) {
    let mut c = (0, 0, 0);
    for (&p, &l) in predicted.iter().zip(labels) {
        match (p, l == Label::Inlier) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, true) => c.2 += 1,
            (false, false) => {}
        }
    }
    c
}

/// Seed of trial `trial` within a cell's data stream.
pub fn trial_seed(experiment_seed: u64, cell: &GridCell, trial: usize) -> u64 {
    mix_seed(cell.data_key(experiment_seed), trial as u64)
}

pub fn run_trial(experiment: &Experiment, cell: &GridCell, trial: usize) -> TrialRecord {
    let seed = trial_seed(experiment.seed, cell, trial);
    let scene_config = SceneConfig {
        kind: cell.scene_kind,
        n_points: cell.n_points,
        seed,
        ..experiment.scene
    };
    let failed = |error: Error, n_inliers: usize| TrialRecord {
        trial,
        rotation_error_deg: FAILURE_ERROR_DEG,
        d_min: None,
        true_positives: 0,
        false_positives: 0,
        false_negatives: n_inliers,
        runtime_ms: 0.0,
        error: Some(error),
    };
    let scene = match generate_scene(&scene_config) {
        Ok(s) => s,
        Err(e) => return failed(e, 0),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
    let matches = corrupt_matches(&scene, cell.noise_px, cell.outlier_fraction, &mut rng);
    let n_inliers = matches.pairs.len() - matches.outlier_count();
    let ransac = RansacConfig {
        seed: mix_seed(seed, 2),
        ..experiment.ransac
    };

    let start = Instant::now();
    let result = run_estimator(
        cell.estimator,
        &matches.pairs,
        &experiment.gnc,
        &ransac,
        Some(&scene.pose_true),
    );
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(est) => {
            let (tp, fp, fn_) = confusion(&est.inliers, &matches.labels);
            TrialRecord {
                trial,
                rotation_error_deg: rotation_angular_error(scene.pose_true.r(), est.pose.r()),
                d_min: Some(est.d_min),
                true_positives: tp,
                false_positives: fp,
                false_negatives: fn_,
                runtime_ms,
                error: None,
            }
        }
        Err(e) => TrialRecord {
            runtime_ms,
            ..failed(e, n_inliers)
        },
    }
}

/// Runs every cell of the sweep. Trials run in parallel; the table is
/// ordered as [`Experiment::cells`] and trials by index.
pub fn monte_carlo(experiment: &Experiment) -> Result<MetricsTable> {
    experiment.validate()?;
    let cells = experiment
        .cells()
        .into_iter()
        .map(|cell| {
            let trials = (0..experiment.n_trials)
                .into_par_iter()
                .map(|t| run_trial(experiment, &cell, t))
                .collect();
            CellMetrics { cell, trials }
        })
        .collect();
    Ok(MetricsTable { cells })
}
