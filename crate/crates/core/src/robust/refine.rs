//! Local minimization of the summed LiGT residual `sum_i w_i |L_i t|`.
//!
//! The pose is updated on a local chart: `R <- exp([dw]) R` for the rotation
//! and `t <- normalize(t + B dt)` for the translation, where the columns of
//! `B` span the tangent plane of the unit sphere at `t`.

use nalgebra::{Matrix3x2, Rotation3, SMatrix, SVector};

use crate::geometry::{cheirality_count, skew, BearingPair, Mat3, RelativePose, Vec3};

pub type Chart = SVector<f64, 5>;

const MAX_ITERATIONS: usize = 100;
const MAX_DAMPING: f64 = 1e12;
const RESIDUAL_FLOOR: f64 = 1e-15;

/// Orthonormal basis of the plane orthogonal to the unit vector `t`.
pub fn tangent_basis(t: &Vec3) -> Matrix3x2<f64> {
    let seed = if t.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let b1 = t.cross(&seed).normalize();
    let b2 = t.cross(&b1);
    Matrix3x2::from_columns(&[b1, b2])
}

/// Moves `pose` by `delta` on the chart at `pose`.
pub fn retract(pose: &RelativePose, delta: &Chart) -> RelativePose {
    let w = Vec3::new(delta[0], delta[1], delta[2]);
    let t = pose.t();
    let step = tangent_basis(&t) * nalgebra::Vector2::new(delta[3], delta[4]);
    RelativePose {
        rotation: Rotation3::new(w) * pose.rotation,
        translation: nalgebra::Unit::new_normalize(t + step),
    }
}

/// `L t` and its Jacobian with respect to the chart at `pose`.
fn residual_and_jacobian(
    rotation: &Mat3,
    t: &Vec3,
    basis: &Matrix3x2<f64>,
    pair: &BearingPair,
) -> (Vec3, SMatrix<f64, 3, 5>) {
    let xp = pair.x_prime;
    let u = rotation * pair.x;
    let a = xp.cross(&u);
    let p = t.cross(&xp);
    let ap = a.dot(&p);
    let aa = a.dot(&a);
    let r = a * ap - p * aa;

    let dr_da = Mat3::identity() * ap + a * p.transpose() - p * a.transpose() * 2.0;
    let da_dw = -(skew(&xp) * skew(&u));
    let dr_dp = a * a.transpose() - Mat3::identity() * aa;
    let dp_dt = -skew(&xp) * basis;

    let mut j = SMatrix::<f64, 3, 5>::zeros();
    j.fixed_columns_mut::<3>(0).copy_from(&(dr_da * da_dw));
    j.fixed_columns_mut::<2>(3).copy_from(&(dr_dp * dp_dt));
    (r, j)
}

fn weight(weights: Option<&[f64]>, i: usize) -> f64 {
    weights.map_or(1.0, |w| w[i])
}

/// Weighted LiGT cost `sum_i w_i |L_i t|`.
pub fn ligt_cost(pose: &RelativePose, pairs: &[BearingPair], weights: Option<&[f64]>) -> f64 {
    let r = pose.r();
    let t = pose.t();
    let basis = tangent_basis(&t);
    pairs
        .iter()
        .enumerate()
        .map(|(i, pair)| weight(weights, i) * residual_and_jacobian(r, &t, &basis, pair).0.norm())
        .sum()
}

/// Gradient of [`ligt_cost`] with respect to the chart at `pose`.
pub fn ligt_cost_gradient(pose: &RelativePose, pairs: &[BearingPair], weights: Option<&[f64]>) -> Chart {
    let r = pose.r();
    let t = pose.t();
    let basis = tangent_basis(&t);
    let mut g = Chart::zeros();
    for (i, pair) in pairs.iter().enumerate() {
        let (res, j) = residual_and_jacobian(r, &t, &basis, pair);
        let n = res.norm();
        if n > RESIDUAL_FLOOR {
            g += j.transpose() * res * (weight(weights, i) / n);
        }
    }
    g
}

/// Result of [`refine_ligt`].
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub pose: RelativePose,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
}

/// Damped reweighted Gauss-Newton on the LiGT cost starting from `pose0`.
///
/// Steps are accepted only if they lower the cost, so the returned cost never
/// exceeds the initial one. The cost is even in `t`; the returned sign is the
/// one with more pairs in front of both cameras (ties keep the refined sign).
pub fn refine_ligt(pose0: &RelativePose, pairs: &[BearingPair], weights: Option<&[f64]>) -> Refinement {
    let initial_cost = ligt_cost(pose0, pairs, weights);
    let mut pose = *pose0;
    let mut cost = initial_cost;
    let mut damping = 1e-4;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS && cost > 0.0 && damping < MAX_DAMPING {
        iterations += 1;
        let r = pose.r();
        let t = pose.t();
        let basis = tangent_basis(&t);
        let mut h = SMatrix::<f64, 5, 5>::zeros();
        let mut g = Chart::zeros();
        for (i, pair) in pairs.iter().enumerate() {
            let (res, j) = residual_and_jacobian(r, &t, &basis, pair);
            let n = res.norm().max(RESIDUAL_FLOOR);
            let s = weight(weights, i) / n;
            h += j.transpose() * j * s;
            g += j.transpose() * res * s;
        }

        let mut accepted = false;
        while damping < MAX_DAMPING {
            let mut lhs = h;
            for k in 0..5 {
                lhs[(k, k)] += damping * h[(k, k)].max(1e-12);
            }
            let Some(delta) = lhs.cholesky().map(|c| c.solve(&(-g))) else {
                damping *= 10.0;
                continue;
            };
            let candidate = retract(&pose, &delta);
            let candidate_cost = ligt_cost(&candidate, pairs, weights);
            if candidate_cost < cost {
                let gain = cost - candidate_cost;
                pose = candidate;
                cost = candidate_cost;
                damping = (damping * 0.1).max(1e-12);
                accepted = true;
                if gain <= 1e-14 * cost.max(f64::MIN_POSITIVE) {
                    damping = MAX_DAMPING;
                }
                break;
            }
            damping *= 10.0;
        }
        if !accepted {
            break;
        }
    }

    let flipped = pose.flipped();
    if cheirality_count(&flipped, pairs) > cheirality_count(&pose, pairs) {
        pose = flipped;
    }
    Refinement {
        pose,
        initial_cost,
        final_cost: cost,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangent_basis_is_orthonormal() {
        for t in [Vec3::x(), Vec3::z(), Vec3::new(0.3, -0.8, 0.2).normalize()] {
            let b = tangent_basis(&t);
            let gram = b.transpose() * b;
            assert!((gram - nalgebra::Matrix2::identity()).norm() < 1e-14);
            assert!((b.transpose() * t).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_step_retracts_to_same_pose() {
        let pose = RelativePose::new(Rotation3::new(Vec3::new(0.1, 0.2, -0.1)), Vec3::new(1.0, 0.5, 0.2));
        let moved = retract(&pose, &Chart::zeros());
        assert!((moved.r() - pose.r()).norm() < 1e-15);
        assert!((moved.t() - pose.t()).norm() < 1e-15);
    }
}
