//! Two-view relative pose estimation on calibrated bearing vectors.
//!
//! * [`geometry`]: essential matrices, triangulation, chirality, rotation error.
//! * [`residuals`]: per-pair residual statistics, including the pose-only
//!   LiGT and PPO forms.
//! * [`lirp`]: the weighted linear six-point solver.
//! * [`robust`]: GNC-IRLS, GNC-RANSAC, and LiGT cost refinement.
//! * [`simlab`]: synthetic scenes, corruption, and Monte Carlo sweeps.

pub mod error;
pub mod geometry;
pub mod lirp;
pub mod residuals;
pub mod robust;
pub mod seeding;
pub mod simlab;

pub use error::{Error, Result};
pub use geometry::{BearingPair, RelativePose};
