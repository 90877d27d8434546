use nalgebra::{Rotation3, Unit, Vector2};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BearingPair, RelativePose, Vec3};

/// Bearings whose third component falls below this are treated as lying on
/// the image plane and rejected.
const MIN_BEARING_Z: f64 = 1e-6;
/// Translations shorter than this fraction of the maximum are redrawn.
const MIN_TRANSLATION_FRACTION: f64 = 1e-3;
/// Planes seen more obliquely than this (cosine to the anchor ray) are redrawn.
const MIN_PLANE_INCIDENCE: f64 = 0.2;
const ATTEMPTS_PER_POINT: usize = 200;
const MAX_PLANES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneKind {
    Normal,
    Planar,
}

impl SceneKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SceneKind::Normal => "normal",
            SceneKind::Planar => "planar",
        }
    }
}

impl std::str::FromStr for SceneKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(SceneKind::Normal),
            "planar" => Ok(SceneKind::Planar),
            other => Err(format!("unknown scene kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub kind: SceneKind,
    pub n_points: usize,
    pub depth_min: f64,
    pub depth_max: f64,
    pub max_translation: f64,
    pub rotation_perturbation_deg: f64,
    /// Focal length in pixels used to convert pixel noise to normalized units.
    pub focal_px: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            kind: SceneKind::Normal,
            n_points: 30,
            depth_min: 4.0,
            depth_max: 18.0,
            max_translation: 2.0,
            rotation_perturbation_deg: 0.5,
            focal_px: 800.0,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.depth_min > 0.0) || !(self.depth_max > self.depth_min) {
            return Err(Error::InvalidConfig {
                field: "depth_range",
                reason: format!("need 0 < min < max, got [{}, {}]", self.depth_min, self.depth_max),
            });
        }
        if self.n_points < 6 {
            return Err(Error::InvalidConfig {
                field: "n_points",
                reason: format!("need at least 6 points, got {}", self.n_points),
            });
        }
        if !(self.max_translation > 0.0) {
            return Err(Error::InvalidConfig {
                field: "max_translation",
                reason: "must be positive".into(),
            });
        }
        if !(self.focal_px > 0.0) {
            return Err(Error::InvalidConfig {
                field: "focal_px",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Inlier,
    Outlier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoViewScene {
    pub config: SceneConfig,
    /// Ground truth with unit translation.
    pub pose_true: RelativePose,
    /// Metric translation (`|t| <= max_translation`) used to place the points.
    pub translation: Vec3,
    /// Points in the left camera frame.
    pub points: Vec<Vec3>,
    pub clean_pairs: Vec<BearingPair>,
    pub labels: Vec<Label>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedMatches {
    pub pairs: Vec<BearingPair>,
    pub labels: Vec<Label>,
}

impl CorruptedMatches {
    pub fn outlier_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Outlier).count()
    }
}

fn unit_sphere(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

fn in_ball(rng: &mut impl Rng, radius: f64) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        let n = v.norm();
        if n <= 1.0 && n >= MIN_TRANSLATION_FRACTION {
            return v * radius;
        }
    }
}

fn random_rotation(rng: &mut impl Rng, max_deg: f64) -> Rotation3<f64> {
    let max = max_deg.to_radians();
    let mut angle = || if max > 0.0 { rng.random_range(-max..=max) } else { 0.0 };
    let (roll, pitch, yaw) = (angle(), angle(), angle());
    Rotation3::from_euler_angles(roll, pitch, yaw)
}

/// Random point at a distance in `[min, max]` from the left camera centre.
fn random_point(rng: &mut impl Rng, min: f64, max: f64) -> Vec3 {
    unit_sphere(rng) * rng.random_range(min..=max)
}

fn in_front(v: &Vec3) -> bool {
    v.z > MIN_BEARING_Z * v.norm()
}

/// Generates a chirality-consistent two-view scene.
pub fn generate_scene(config: &SceneConfig) -> Result<TwoViewScene> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rotation = random_rotation(&mut rng, config.rotation_perturbation_deg);
    let translation = in_ball(&mut rng, config.max_translation);
    let accept = |p: &Vec3| in_front(p) && in_front(&(rotation * p + translation));

    let points = match config.kind {
        SceneKind::Normal => {
            let budget = ATTEMPTS_PER_POINT * config.n_points;
            let mut pts = Vec::with_capacity(config.n_points);
            let mut rounds = 0;
            while pts.len() < config.n_points {
                if rounds == budget {
                    return Err(Error::GenerationExhausted {
                        rounds,
                        accepted: pts.len(),
                        requested: config.n_points,
                    });
                }
                rounds += 1;
                let p = random_point(&mut rng, config.depth_min, config.depth_max);
                if accept(&p) {
                    pts.push(p);
                }
            }
            pts
        }
        SceneKind::Planar => planar_points(&mut rng, config, &accept)?,
    };

    let pose_true = RelativePose::new(rotation, translation);
    let clean_pairs = points
        .iter()
        .enumerate()
        .map(|(i, p)| BearingPair::new(*p, rotation * p + translation, i))
        .collect();
    Ok(TwoViewScene {
        config: *config,
        pose_true,
        translation,
        labels: vec![Label::Inlier; points.len()],
        points,
        clean_pairs,
    })
}

fn planar_points(rng: &mut ChaCha8Rng, config: &SceneConfig, accept: &impl Fn(&Vec3) -> bool) -> Result<Vec<Vec3>> {
    let budget = ATTEMPTS_PER_POINT * config.n_points;
    let mut best = 0;
    for _ in 0..MAX_PLANES {
        let anchor_dir = loop {
            let d = unit_sphere(rng);
            if d.z > 0.0 {
                break d;
            }
        };
        let anchor = anchor_dir * rng.random_range(config.depth_min..=config.depth_max);
        let normal = loop {
            let n = unit_sphere(rng);
            if n.dot(&anchor_dir).abs() >= MIN_PLANE_INCIDENCE {
                break n;
            }
        };
        let seed_axis = if normal.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let e1 = normal.cross(&seed_axis).normalize();
        let e2 = normal.cross(&e1);

        let mut pts = Vec::with_capacity(config.n_points);
        for _ in 0..budget {
            let u = rng.random_range(-config.depth_max..=config.depth_max);
            let v = rng.random_range(-config.depth_max..=config.depth_max);
            let p = anchor + e1 * u + e2 * v;
            let dist = p.norm();
            if dist >= config.depth_min && dist <= config.depth_max && accept(&p) {
                pts.push(p);
                if pts.len() == config.n_points {
                    return Ok(pts);
                }
            }
        }
        best = best.max(pts.len());
    }
    Err(Error::GenerationExhausted {
        rounds: MAX_PLANES * budget,
        accepted: best,
        requested: config.n_points,
    })
}

/// Adds pixel noise to both views and replaces `floor(fraction * n)` right
/// observations with projections of unrelated points.
pub fn corrupt_matches(
    scene: &TwoViewScene,
    noise_px: f64,
    outlier_fraction: f64,
    rng: &mut impl Rng,
) -> CorruptedMatches {
    let n = scene.clean_pairs.len();
    let n_out = ((outlier_fraction.clamp(0.0, 1.0) * n as f64) + 1e-9).floor() as usize;
    let n_out = n_out.min(n);
    let mut pairs = scene.clean_pairs.clone();
    let mut labels = scene.labels.clone();

    if n_out > 0 {
        let rotation = scene.pose_true.rotation;
        let cfg = &scene.config;
        let mut chosen = index::sample(rng, n, n_out).into_vec();
        chosen.sort_unstable();
        for i in chosen {
            let replacement = loop {
                let p = random_point(rng, cfg.depth_min, cfg.depth_max);
                let right = rotation * p + scene.translation;
                if in_front(&right) {
                    break right;
                }
            };
            pairs[i] = BearingPair::new(pairs[i].x, replacement, pairs[i].id);
            labels[i] = Label::Outlier;
        }
    }

    if noise_px > 0.0 {
        let sigma = noise_px / scene.config.focal_px;
        let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
        for pair in pairs.iter_mut() {
            let mut jitter = || Vector2::new(normal.sample(rng), normal.sample(rng));
            let left = pair.left_image() + jitter();
            let right = pair.right_image() + jitter();
            *pair = BearingPair::from_image(left, right, pair.id);
        }
    }
    CorruptedMatches { pairs, labels }
}

/// Rotation by `angle_deg` about a random axis, composed onto `base`.
pub fn perturb_rotation(base: &Rotation3<f64>, angle_deg: f64, rng: &mut impl Rng) -> Rotation3<f64> {
    let axis = Unit::new_normalize(unit_sphere(rng));
    base * Rotation3::from_axis_angle(&axis, angle_deg.to_radians())
}
