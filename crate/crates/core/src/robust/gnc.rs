//! Graduated non-convexity with iteratively reweighted LiRP fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BearingPair, RelativePose};
use crate::lirp::lirp_solve;
use crate::residuals::residual_ligt;

/// Gaussian consistency factor of the median absolute deviation.
pub const MAD_CONSISTENCY: f64 = 1.4826;
/// Ratio between the truncation threshold `c` and the scale `sigma`.
pub const THRESHOLD_FACTOR: f64 = 5.54;
/// Thresholds at or below this value are treated as a perfect fit.
pub const ZERO_SCALE: f64 = 1e-15;
/// Upper bound on `mu`; beyond it the weights are already binary.
pub const MU_MAX: f64 = 1e12;

/// Scale estimate used for the truncation threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleRule {
    /// `1.4826 * med|v - med(v)|`.
    #[default]
    Mad,
    /// `1.4826 * med|v|`.
    MedianAbs,
}

/// How `mu` grows between reweighting steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MuSchedule {
    /// `mu <- factor * mu`.
    Geometric { factor: f64 },
    /// `mu <- mu^exponent`; needs `mu0 > 1` to grow.
    Superlinear { exponent: f64 },
}

impl MuSchedule {
    pub fn advance(self, mu: f64) -> f64 {
        let next = match self {
            MuSchedule::Geometric { factor } => mu * factor,
            MuSchedule::Superlinear { exponent } => mu.powf(exponent),
        };
        next.min(MU_MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GncConfig {
    pub stop_epsilon: f64,
    pub max_iterations: usize,
    /// Initial `mu`; small values start close to plain least squares.
    pub mu0: f64,
    pub schedule: MuSchedule,
    pub scale_rule: ScaleRule,
    /// Keep per-iteration residuals and weights in the returned state.
    pub record_trace: bool,
}

impl Default for GncConfig {
    fn default() -> Self {
        Self {
            stop_epsilon: 1e-8,
            max_iterations: 100,
            mu0: 1e-3,
            schedule: MuSchedule::Geometric { factor: 1.4 },
            scale_rule: ScaleRule::Mad,
            record_trace: false,
        }
    }
}

impl GncConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(Error::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        if !(self.stop_epsilon >= 0.0) {
            return bad("stop_epsilon", "must be nonnegative");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations", "must be at least 1");
        }
        if !(self.mu0 > 0.0) || !self.mu0.is_finite() {
            return bad("mu0", "must be positive and finite");
        }
        match self.schedule {
            MuSchedule::Geometric { factor } if !(factor > 1.0) || !factor.is_finite() => {
                return bad("schedule.factor", "must be finite and greater than 1");
            }
            MuSchedule::Superlinear { exponent } if !(exponent > 1.0) || !exponent.is_finite() => {
                return bad("schedule.exponent", "must be finite and greater than 1");
            }
            MuSchedule::Superlinear { .. } if self.mu0 <= 1.0 => {
                return bad("mu0", "a superlinear schedule needs mu0 > 1");
            }
            _ => {}
        }
        Ok(())
    }
}

/// One reweighting step, recorded when tracing is enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct GncIteration {
    pub residuals: Vec<f64>,
    pub weights: Vec<f64>,
    pub sigma: f64,
    pub c: f64,
    pub mu: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GncState {
    pub weights: Vec<f64>,
    pub sigma: f64,
    pub c: f64,
    pub mu: f64,
    pub epsilon: f64,
    /// Number of completed reweighting steps.
    pub iteration: usize,
    pub converged: bool,
    /// `epsilon` after each step.
    pub epsilon_history: Vec<f64>,
    pub trace: Vec<GncIteration>,
    /// Error that stopped the loop early, if any.
    pub stopped_by: Option<Error>,
    /// Eigenvalue gap reported by the last successful LiRP fit.
    pub d_min: f64,
}

/// Lower-middle order statistic; `None` for an empty slice.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    let k = (v.len() - 1) / 2;
    let (_, m, _) = v.select_nth_unstable_by(k, f64::total_cmp);
    Some(*m)
}

/// `1.4826` times the median absolute deviation about the median.
pub fn mad_sigma(residuals: &[f64]) -> f64 {
    let Some(med) = lower_median(residuals) else {
        return 0.0;
    };
    let dev: Vec<f64> = residuals.iter().map(|v| (v - med).abs()).collect();
    MAD_CONSISTENCY * lower_median(&dev).unwrap_or(0.0)
}

/// `1.4826` times the median of `|v|`.
pub fn median_abs_sigma(residuals: &[f64]) -> f64 {
    let abs: Vec<f64> = residuals.iter().map(|v| v.abs()).collect();
    MAD_CONSISTENCY * lower_median(&abs).unwrap_or(0.0)
}

pub fn scale_estimate(rule: ScaleRule, residuals: &[f64]) -> f64 {
    match rule {
        ScaleRule::Mad => mad_sigma(residuals),
        ScaleRule::MedianAbs => median_abs_sigma(residuals),
    }
}

/// Truncated-least-squares GNC weights
/// `w = clamp(c sqrt(mu (mu + 1)) / |v| - mu, 0, 1)`.
pub fn gnc_weight_update(residuals: &[f64], c: f64, mu: f64) -> Result<Vec<f64>> {
    if !(c > ZERO_SCALE) {
        return Err(Error::ZeroScale(c));
    }
    let mu = mu.min(MU_MAX);
    let k = c * (mu * (mu + 1.0)).sqrt();
    Ok(residuals
        .iter()
        .map(|v| {
            let a = v.abs();
            if a == 0.0 {
                1.0
            } else {
                (k / a - mu).clamp(0.0, 1.0)
            }
        })
        .collect())
}

fn ligt_residuals(pose: &RelativePose, pairs: &[BearingPair]) -> Vec<f64> {
    pairs.iter().map(|p| residual_ligt(pose, p)).collect()
}

/// Alternates weighted LiRP fits with TLS reweighting on the LiGT residual.
///
/// If a fit fails after at least one successful iteration, the last good
/// pose is returned with `converged = false` and the error in `stopped_by`.
pub fn gnc_irls(pairs: &[BearingPair], config: &GncConfig) -> Result<(RelativePose, GncState)> {
    config.validate()?;
    let n = pairs.len();
    let mut state = GncState {
        weights: vec![1.0; n],
        sigma: 0.0,
        c: 0.0,
        mu: config.mu0,
        epsilon: f64::INFINITY,
        iteration: 0,
        converged: false,
        epsilon_history: Vec::new(),
        trace: Vec::new(),
        stopped_by: None,
        d_min: 0.0,
    };
    let mut pose: Option<RelativePose> = None;

    for _ in 0..config.max_iterations {
        let fitted = match lirp_solve(pairs, Some(&state.weights)) {
            Ok((p, diag)) => {
                state.d_min = diag.d_min;
                p
            }
            Err(e) => match pose {
                Some(p) => {
                    state.stopped_by = Some(e);
                    return Ok((p, state));
                }
                None => return Err(e),
            },
        };
        pose = Some(fitted);

        let v = ligt_residuals(&fitted, pairs);
        let sigma = scale_estimate(config.scale_rule, &v);
        let c = THRESHOLD_FACTOR * sigma;
        let weights = gnc_weight_update(&v, c, state.mu).unwrap_or_else(|_| vec![1.0; n]);
        let epsilon: f64 = weights.iter().zip(&v).map(|(w, r)| w * r).sum();

        if config.record_trace {
            state.trace.push(GncIteration {
                residuals: v,
                weights: weights.clone(),
                sigma,
                c,
                mu: state.mu,
                epsilon,
            });
        }
        let delta = (epsilon - state.epsilon).abs();
        state.weights = weights;
        state.sigma = sigma;
        state.c = c;
        state.epsilon = epsilon;
        state.iteration += 1;
        state.epsilon_history.push(epsilon);
        if delta < config.stop_epsilon {
            state.converged = true;
            break;
        }
        state.mu = config.schedule.advance(state.mu);
    }
    Ok((pose.expect("at least one iteration ran"), state))
}
