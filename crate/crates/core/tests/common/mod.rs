#![allow(dead_code)]

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twoview_core::geometry::Vec3;
use twoview_core::simlab::{generate_scene, SceneConfig, SceneKind, TwoViewScene};
use twoview_core::RelativePose;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn scene(kind: SceneKind, n_points: usize, seed: u64) -> TwoViewScene {
    generate_scene(&SceneConfig {
        kind,
        n_points,
        seed,
        ..Default::default()
    })
    .expect("scene generation")
}

pub fn unit_vector(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_pose(rng: &mut impl Rng) -> RelativePose {
    let axis = unit_vector(rng);
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    RelativePose::new(Rotation3::new(axis * angle), unit_vector(rng))
}

/// `base` rotated by `angle_deg` about a random axis.
pub fn rotate_by(base: &RelativePose, angle_deg: f64, rng: &mut impl Rng) -> RelativePose {
    let axis = unit_vector(rng);
    RelativePose {
        rotation: Rotation3::new(axis * angle_deg.to_radians()) * base.rotation,
        translation: base.translation,
    }
}
