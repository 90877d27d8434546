//! Prints quantiles of the LiGT residual of clean pairs at one pixel of
//! noise, both at the true pose and at LiRP fits on 30-pair subsets. The
//! default RANSAC inlier threshold was chosen from this output.
//!
//! `cargo run --release -p twoview-core --example calibrate_threshold`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twoview_core::lirp::lirp_solve;
use twoview_core::residuals::residual_ligt;
use twoview_core::robust::DEFAULT_INLIER_THRESHOLD;
use twoview_core::simlab::{corrupt_matches, generate_scene, SceneConfig, SceneKind};

fn quantile(v: &mut [f64], p: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * p).round() as usize]
}

fn pass_rate(v: &[f64], theta: f64) -> f64 {
    v.iter().filter(|&&r| r <= theta).count() as f64 / v.len() as f64
}

fn main() {
    for kind in [SceneKind::Normal, SceneKind::Planar] {
        let (mut at_truth, mut at_fit) = (Vec::new(), Vec::new());
        for seed in 0..1000u64 {
            let config = SceneConfig {
                kind,
                seed,
                n_points: 300,
                ..Default::default()
            };
            let scene = generate_scene(&config).expect("default scene");
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
            let m = corrupt_matches(&scene, 1.0, 0.0, &mut rng);
            at_truth.extend(m.pairs.iter().map(|p| residual_ligt(&scene.pose_true, p)));
            let (pose, _) = lirp_solve(&m.pairs[..30], None).expect("clean subset");
            at_fit.extend(m.pairs.iter().map(|p| residual_ligt(&pose, p)));
        }
        println!(
            "{}: truth p95 {:.3e} p99 {:.3e} pass {:.4} | fit p95 {:.3e} p99 {:.3e} pass {:.4}",
            kind.as_str(),
            quantile(&mut at_truth, 0.95),
            quantile(&mut at_truth, 0.99),
            pass_rate(&at_truth, DEFAULT_INLIER_THRESHOLD),
            quantile(&mut at_fit, 0.95),
            quantile(&mut at_fit, 0.99),
            pass_rate(&at_fit, DEFAULT_INLIER_THRESHOLD),
        );
    }
}
