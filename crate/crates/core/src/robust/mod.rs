//! Outlier-robust estimation built on the weighted LiRP solver.

pub mod gnc;
pub mod ransac;
pub mod refine;

pub use gnc::{gnc_irls, gnc_weight_update, mad_sigma, GncConfig, GncState, MuSchedule, ScaleRule};
pub use ransac::{gnc_ransac, RansacConfig, RansacOutcome, DEFAULT_INLIER_THRESHOLD};
pub use refine::{ligt_cost, ligt_cost_gradient, refine_ligt, Refinement};
