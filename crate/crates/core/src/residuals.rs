//! Per-pair residual statistics for a candidate relative pose.
//!
//! Five statistics are provided: the algebraic essential residual, the
//! two-view reprojection (bundle adjustment) error, the bearing-angle
//! reprojection residual, and the two pose-only residuals built on the linear
//! depth/translation relations (LiGT and PPO). The pose-only forms need no
//! triangulated point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{compose_essential, skew, triangulate, BearingPair, Mat3, RelativePose, TriangulatedPoint, Vec3};

/// Value substituted for BA residuals that cannot be evaluated.
pub const BA_SATURATION: f64 = 1e6;
/// Value substituted for PPO / bearing residuals that cannot be evaluated.
pub const BEARING_SATURATION: f64 = 2.0;

/// Per-pair coefficients of the linear translation constraint `L t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LigtRow {
    pub l: Mat3,
    pub h: Vec3,
    pub h_prime: Vec3,
    /// `|x' x R x|`, the sine of the parallax angle for unit bearings.
    pub theta: f64,
}

/// Depth factors recovered from the pose alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpoScales {
    /// `|t x x'| / theta`, the left/right depth ratio.
    pub lambda: f64,
    /// `|t x R x| / theta`.
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualKind {
    E,
    Ba,
    OpenGv,
    Ligt,
    Ppo,
}

impl ResidualKind {
    /// Value reported when a pair cannot be evaluated under this kind.
    pub fn saturation(self) -> f64 {
        match self {
            ResidualKind::Ba => BA_SATURATION,
            ResidualKind::Ppo | ResidualKind::OpenGv => BEARING_SATURATION,
            // E and LiGT are total; their bearing-based values never exceed 2.
            ResidualKind::E | ResidualKind::Ligt => BEARING_SATURATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pub kind: ResidualKind,
    pub values: Vec<f64>,
}

impl ResidualVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn ligt_row(rotation: &Mat3, pair: &BearingPair) -> LigtRow {
    let xp = pair.x_prime;
    let rx = rotation * pair.x;
    let xp_skew = skew(&xp);
    let rx_skew = skew(&rx);
    let rx_cross_xp = rx_skew * xp;
    let theta = xp.cross(&rx).norm();

    let h = (rx_cross_xp.transpose() * xp_skew).transpose();
    let h_prime = (rx_cross_xp.transpose() * rx_skew).transpose();
    let l = xp_skew * rx * h.transpose() + xp_skew * (theta * theta);
    LigtRow { l, h, h_prime, theta }
}

/// `|x'^T E x|` on the stored bearing vectors.
pub fn residual_e(pose: &RelativePose, pair: &BearingPair) -> f64 {
    let e = compose_essential(pose);
    (pair.x_prime.transpose() * e * pair.x)[(0, 0)].abs()
}

/// `|L t|` with `L` built from the bearing vectors.
pub fn residual_ligt(pose: &RelativePose, pair: &BearingPair) -> f64 {
    (ligt_row(pose.r(), pair).l * pose.t()).norm()
}

/// Distance between the normalized pose-only reprojection
/// `eps = |t x x'| R x + |x' x R x| t` and the observed right bearing.
pub fn residual_ppo(pose: &RelativePose, pair: &BearingPair) -> Result<(f64, PpoScales)> {
    let t = pose.t();
    let rx = pose.r() * pair.x;
    let xp = pair.x_prime;
    let theta = xp.cross(&rx).norm();
    let t_cross_xp = t.cross(&xp).norm();
    let eps = rx * t_cross_xp + t * theta;
    let eps_norm = eps.norm();
    if eps_norm <= 1e-14 {
        return Err(Error::DegenerateEpsilon);
    }
    let scales = if theta > 0.0 {
        PpoScales {
            lambda: t_cross_xp / theta,
            s: t.cross(&rx).norm() / theta,
        }
    } else {
        PpoScales {
            lambda: f64::INFINITY,
            s: f64::INFINITY,
        }
    };
    Ok(((eps / eps_norm - xp).norm(), scales))
}

fn right_frame(pose: &RelativePose, point: &TriangulatedPoint) -> Vec3 {
    pose.r() * point.point + pose.t()
}

/// Reprojection error in normalized image units of the right view.
pub fn residual_ba(pose: &RelativePose, point: &TriangulatedPoint, pair: &BearingPair) -> Result<f64> {
    let eps = right_frame(pose, point);
    if eps.z <= 1e-12 {
        return Err(Error::BehindCamera(eps.z));
    }
    let observed = pair.x_prime / pair.x_prime.z;
    Ok((eps / eps.z - observed).norm())
}

/// `1 - cos` of the angle between reprojected and observed right bearings.
pub fn residual_opengv(pose: &RelativePose, point: &TriangulatedPoint, pair: &BearingPair) -> Result<f64> {
    let eps = right_frame(pose, point);
    let norm = eps.norm();
    if norm <= 1e-14 {
        return Err(Error::DegenerateEpsilon);
    }
    Ok((1.0 - eps.dot(&pair.x_prime) / norm).abs())
}

/// Evaluates one residual kind over every pair. Pairs that cannot be
/// evaluated receive [`ResidualKind::saturation`].
pub fn residual_vector(kind: ResidualKind, pose: &RelativePose, pairs: &[BearingPair]) -> ResidualVector {
    let values = pairs
        .iter()
        .map(|pair| single_residual(kind, pose, pair).unwrap_or(kind.saturation()))
        .collect();
    ResidualVector { kind, values }
}

fn single_residual(kind: ResidualKind, pose: &RelativePose, pair: &BearingPair) -> Result<f64> {
    match kind {
        ResidualKind::E => Ok(residual_e(pose, pair)),
        ResidualKind::Ligt => Ok(residual_ligt(pose, pair)),
        ResidualKind::Ppo => residual_ppo(pose, pair).map(|(v, _)| v),
        ResidualKind::Ba => {
            let point = triangulate(pose, pair)?;
            residual_ba(pose, &point, pair)
        }
        ResidualKind::OpenGv => {
            let point = triangulate(pose, pair)?;
            residual_opengv(pose, &point, pair)
        }
    }
}
