//! JSON and CSV output schemas. Every document carries a schema version;
//! fields appear in declaration order, so equal inputs give equal bytes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use twoview_core::geometry::{Mat3, Vec3};
use twoview_core::RelativePose;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const RESIDUALS_MAGIC: &str = "# twoview-residuals 1";
pub const SIMULATE_MAGIC: &str = "# twoview-simulate 1";
pub const TOOL: &str = "twoview";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub method: String,
    pub seed: u64,
    /// Hash of the canonical JSON of the effective settings.
    pub config_sha256: String,
    /// Hash of the match file bytes; absent when it could not be read.
    pub matches_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseJson {
    /// Row-major.
    pub rotation: Vec<f64>,
    pub translation: Vec<f64>,
}

impl PoseJson {
    pub fn from_pose(pose: &RelativePose) -> Self {
        let r = pose.r();
        let t = pose.t();
        Self {
            rotation: (0..3).flat_map(|i| (0..3).map(move |j| r[(i, j)])).collect(),
            translation: vec![t.x, t.y, t.z],
        }
    }

    /// `None` unless the arrays have 9 and 3 entries.
    pub fn to_pose(&self) -> Option<RelativePose> {
        if self.rotation.len() != 9 || self.translation.len() != 3 {
            return None;
        }
        let r = Mat3::from_row_slice(&self.rotation);
        let t = Vec3::from_column_slice(&self.translation);
        Some(RelativePose::from_matrix(&r, t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairJson {
    pub index: usize,
    pub inlier: bool,
    pub residual_ligt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub d_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseMetrics {
    pub rotation_error_deg: f64,
    pub translation_error_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub metadata: Metadata,
    /// `"ok"` or `"error"`.
    pub status: String,
    #[serde(default)]
    pub error: Option<ErrorInfo>,
    #[serde(default)]
    pub pose: Option<PoseJson>,
    #[serde(default)]
    pub pairs: Vec<PairJson>,
    #[serde(default)]
    pub n_inliers: usize,
    #[serde(default)]
    pub diagnostics: Option<Diagnostics>,
    #[serde(default)]
    pub metrics: Option<PoseMetrics>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPair {
    pub report: String,
    pub truth: String,
    pub rotation_error_deg: f64,
    pub translation_error_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub schema_version: u32,
    pub pairs: Vec<EvaluatedPair>,
    pub mean_error_deg: f64,
    /// Lower-middle median for even counts.
    pub median_error_deg: f64,
}

/// Angle between two directions in degrees.
pub fn direction_error_deg(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}

pub fn pose_metrics(truth: &RelativePose, estimate: &RelativePose) -> PoseMetrics {
    PoseMetrics {
        rotation_error_deg: twoview_core::geometry::rotation_angular_error(truth.r(), estimate.r()),
        translation_error_deg: direction_error_deg(&truth.t(), &estimate.t()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    #[test]
    fn pose_json_round_trip() {
        let pose = RelativePose::new(Rotation3::from_euler_angles(0.1, -0.2, 0.3), Vec3::new(1.0, 2.0, 2.0));
        let back = PoseJson::from_pose(&pose).to_pose().unwrap();
        assert!((back.r() - pose.r()).norm() < 1e-15);
        assert!((back.t() - pose.t()).norm() < 1e-15);
        assert!(PoseJson {
            rotation: vec![1.0; 8],
            translation: vec![0.0; 3]
        }
        .to_pose()
        .is_none());
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
