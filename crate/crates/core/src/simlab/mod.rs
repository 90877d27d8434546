//! Synthetic two-view scenes and Monte Carlo experiments.

mod scene;

pub use scene::{
    corrupt_matches, generate_scene, perturb_rotation, CorruptedMatches, Label, SceneConfig, SceneKind, TwoViewScene,
};

mod experiment;

pub use experiment::{
    confusion, monte_carlo, run_estimator, run_trial, trial_seed, CellMetrics, Estimate, Estimator, Experiment,
    GridCell, MetricsTable, TrialRecord, FAILURE_ERROR_DEG, GNC_INLIER_WEIGHT,
};
