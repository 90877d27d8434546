//! Two-view geometry primitives.
//!
//! Poses follow a single convention throughout the crate: a point expressed
//! in the left camera frame maps to the right camera frame as
//! `X' = R * X + t`. Observations are unit bearing vectors whose underlying
//! normalized image coordinates have a positive third component.
//!
//! The classic reprojection error is usually written with the inverse
//! convention `R * (X - c)`, where `c` is the right camera centre in the left
//! frame. Under the convention used here `c = -R^T t`, so both forms give the
//! same point `R * X + t` in the right frame.

use nalgebra::{Matrix3, Rotation3, Unit, Vector2, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// A correspondence between the two views, stored as unit bearing vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingPair {
    pub x: Vec3,
    pub x_prime: Vec3,
    pub id: usize,
}

impl BearingPair {
    /// Builds a pair from arbitrary (non-zero) direction vectors; both are
    /// normalized.
    pub fn new(x: Vec3, x_prime: Vec3, id: usize) -> Self {
        Self {
            x: x.normalize(),
            x_prime: x_prime.normalize(),
            id,
        }
    }

    /// Builds a pair from normalized image coordinates `(x, y)` of both views.
    pub fn from_image(left: Vector2<f64>, right: Vector2<f64>, id: usize) -> Self {
        Self::new(Vec3::new(left.x, left.y, 1.0), Vec3::new(right.x, right.y, 1.0), id)
    }

    /// Normalized image coordinates `(x/z, y/z)` of the left observation.
    pub fn left_image(&self) -> Vector2<f64> {
        Vector2::new(self.x.x / self.x.z, self.x.y / self.x.z)
    }

    /// Normalized image coordinates of the right observation.
    pub fn right_image(&self) -> Vector2<f64> {
        Vector2::new(self.x_prime.x / self.x_prime.z, self.x_prime.y / self.x_prime.z)
    }
}

/// Rotation and unit translation direction of the right view relative to the
/// left one (`X' = R X + t`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePose {
    pub rotation: Rotation3<f64>,
    pub translation: Unit<Vec3>,
}

impl RelativePose {
    pub fn new(rotation: Rotation3<f64>, translation: Vec3) -> Self {
        Self {
            rotation,
            translation: Unit::new_normalize(translation),
        }
    }

    /// Builds a pose from a raw 3x3 matrix, re-orthonormalizing it.
    pub fn from_matrix(rotation: &Mat3, translation: Vec3) -> Self {
        Self::new(Rotation3::from_matrix(rotation), translation)
    }

    pub fn r(&self) -> &Mat3 {
        self.rotation.matrix()
    }

    pub fn t(&self) -> Vec3 {
        self.translation.into_inner()
    }

    /// Same rotation, translation negated.
    pub fn flipped(&self) -> Self {
        Self {
            rotation: self.rotation,
            translation: -self.translation,
        }
    }
}

/// A point reconstructed from one correspondence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangulatedPoint {
    /// Position in the left camera frame.
    pub point: Vec3,
    pub depth_left: f64,
    pub depth_right: f64,
}

/// Whole-set rotation diagnostic built from the stacked rows `x'_i x (R x_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KneipDiagnostic {
    /// Smallest eigenvalue of the 3x3 Gram matrix of the stacked rows.
    pub lambda_m: f64,
    /// Smallest singular value of the stacked `n x 3` matrix.
    pub sigma_min_b: f64,
    /// Unit vector spanning the (near) null space; aligns with the
    /// translation direction when the rotation is correct.
    pub null_direction: Vec3,
}

/// Cross-product matrix: `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// `E = [t]x R`.
pub fn compose_essential(pose: &RelativePose) -> Mat3 {
    skew(&pose.t()) * pose.r()
}

/// The four `(R, t)` interpretations of an essential matrix, ordered
/// `(R1, t), (R1, -t), (R2, t), (R2, -t)`.
pub fn decompose_essential(e: &Mat3) -> Result<[RelativePose; 4]> {
    let norm = e.norm();
    if norm < 1e-12 {
        return Err(Error::NearZeroMatrix(norm));
    }
    let svd = (e / norm).svd(true, true);
    let (u, v_t) = sorted_svd3(svd);
    let mut u = u;
    let mut v_t = v_t;
    if u.determinant() < 0.0 {
        u = -u;
    }
    if v_t.determinant() < 0.0 {
        v_t = -v_t;
    }
    let w = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let r1 = Rotation3::from_matrix_unchecked(u * w * v_t);
    let r2 = Rotation3::from_matrix_unchecked(u * w.transpose() * v_t);
    let t: Vec3 = u.column(2).into_owned();
    Ok([
        RelativePose::new(r1, t),
        RelativePose::new(r1, -t),
        RelativePose::new(r2, t),
        RelativePose::new(r2, -t),
    ])
}

/// Closest matrix with singular values `(1, 1, 0)` in the Frobenius sense.
pub fn project_to_essential(q: &Mat3) -> Mat3 {
    let (u, v_t) = sorted_svd3(q.svd(true, true));
    u * Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0)) * v_t
}

fn sorted_svd3(svd: nalgebra::SVD<f64, nalgebra::U3, nalgebra::U3>) -> (Mat3, Mat3) {
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    let s = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let mut u_sorted = Mat3::zeros();
    let mut v_sorted = Mat3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_row(dst, &v_t.row(src));
    }
    (u_sorted, v_sorted)
}

/// Midpoint triangulation: the point halfway along the common perpendicular
/// of the two viewing rays, expressed in the left frame.
pub fn triangulate(pose: &RelativePose, pair: &BearingPair) -> Result<TriangulatedPoint> {
    let r = pose.r();
    let t = pose.t();
    let rx = r * pair.x;
    if pair.x_prime.cross(&rx).norm() <= 1e-10 {
        return Err(Error::DegenerateRays);
    }

    // Right ray in the left frame: c + s * d.
    let c = -(r.transpose() * t);
    let d1 = pair.x;
    let d2 = r.transpose() * pair.x_prime;

    // Normal equations for min |l1 d1 - c - l2 d2|^2.
    let a11 = d1.dot(&d1);
    let a12 = d1.dot(&d2);
    let a22 = d2.dot(&d2);
    let b1 = d1.dot(&c);
    let b2 = d2.dot(&c);
    let det = a11 * a22 - a12 * a12;
    let l1 = (b1 * a22 - a12 * b2) / det;
    let l2 = (a12 * b1 - a11 * b2) / det;

    let p1 = d1 * l1;
    let p2 = c + d2 * l2;
    let point = (p1 + p2) * 0.5;
    let right = r * point + t;
    Ok(TriangulatedPoint {
        point,
        depth_left: point.z,
        depth_right: right.z,
    })
}

/// Number of pairs that triangulate in front of both cameras.
pub fn cheirality_count(pose: &RelativePose, pairs: &[BearingPair]) -> usize {
    pairs.iter().filter(|p| is_cheiral(pose, p)).count()
}

pub(crate) fn is_cheiral(pose: &RelativePose, pair: &BearingPair) -> bool {
    matches!(triangulate(pose, pair), Ok(p) if p.depth_left > 0.0 && p.depth_right > 0.0)
}

/// Angle in degrees of the rotation `R_true^T R_est`.
///
/// Evaluated as `atan2(sin, cos)` with the cosine taken from the trace, which
/// equals `acos((trace - 1) / 2)` for proper rotations while keeping full
/// precision for tiny angles.
pub fn rotation_angular_error(r_true: &Mat3, r_est: &Mat3) -> f64 {
    let d = r_true.transpose() * r_est;
    let cos = ((d.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let axis = Vec3::new(d[(2, 1)] - d[(1, 2)], d[(0, 2)] - d[(2, 0)], d[(1, 0)] - d[(0, 1)]);
    let sin = (axis.norm() * 0.5).min(1.0);
    sin.atan2(cos).to_degrees()
}

/// Smallest eigenvalue of the Gram matrix of `b_i = x'_i x (R x_i)` and the
/// direction of its null space.
pub fn kneip_diagnostic(rotation: &Mat3, pairs: &[BearingPair]) -> KneipDiagnostic {
    let rows: Vec<Vec3> = pairs.iter().map(|p| p.x_prime.cross(&(rotation * p.x))).collect();
    let gram = rows.iter().fold(Mat3::zeros(), |acc, b| acc + b * b.transpose());

    if rows.len() < 3 {
        // Rank is at most two; pick the exact null direction of the Gram matrix.
        let eig = gram.symmetric_eigen();
        let imin = eig.eigenvalues.imin();
        return KneipDiagnostic {
            lambda_m: 0.0,
            sigma_min_b: 0.0,
            null_direction: eig.eigenvectors.column(imin).into_owned(),
        };
    }

    let b = nalgebra::DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let svd = b.svd(false, true);
    let v_t = svd.v_t.expect("svd computed with v_t");
    let imin = svd.singular_values.imin();
    let sigma = svd.singular_values[imin];
    // The squared singular value is the smallest Gram eigenvalue without the
    // absolute rounding floor of an eigen-solve on the Gram matrix itself.
    KneipDiagnostic {
        lambda_m: sigma * sigma,
        sigma_min_b: sigma,
        null_direction: Vec3::new(v_t[(imin, 0)], v_t[(imin, 1)], v_t[(imin, 2)]).normalize(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn skew_of_zero_is_zero() {
        assert_eq!(skew(&Vec3::zeros()), Mat3::zeros());
    }

    #[test]
    fn skew_of_unit_x() {
        let expected = Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert_eq!(skew(&Vec3::x()), expected);
    }

    #[test]
    fn skew_matches_cross_product() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        let w = Vec3::new(4.0, 5.0, 6.0);
        assert_eq!(skew(&v) * w, Vec3::new(-3.0, 6.0, -3.0));
        assert_eq!(skew(&v).transpose(), -skew(&v));
    }

    #[test]
    fn essential_of_identity_rotation() {
        let pose = RelativePose::new(Rotation3::identity(), Vec3::z());
        let expected = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_relative_eq!(compose_essential(&pose), expected, epsilon = 1e-15);
    }

    #[test]
    fn decompose_identity_case() {
        let pose = RelativePose::new(Rotation3::identity(), Vec3::x());
        let cands = decompose_essential(&compose_essential(&pose)).unwrap();
        let hits = cands
            .iter()
            .filter(|c| {
                rotation_angular_error(c.r(), &Mat3::identity()) < 1e-8 && c.t().dot(&Vec3::x()).abs() > 1.0 - 1e-10
            })
            .count();
        assert_eq!(hits, 2, "identity rotation with both translation signs");
    }

    #[test]
    fn decompose_rejects_zero_matrix() {
        assert!(matches!(
            decompose_essential(&Mat3::zeros()),
            Err(Error::NearZeroMatrix(_))
        ));
    }

    #[test]
    fn decompose_is_scale_invariant() {
        let pose = RelativePose::new(
            Rotation3::from_scaled_axis(Vec3::new(0.1, -0.2, 0.3)),
            Vec3::new(0.3, 0.1, -0.9),
        );
        let e = compose_essential(&pose);
        let a = decompose_essential(&e).unwrap();
        let b = decompose_essential(&(e * 7.3)).unwrap();
        // The SVD basis is not unique, so compare as sets.
        for pa in &a {
            assert!(b
                .iter()
                .any(|pb| (pa.r() - pb.r()).norm() < 1e-10 && (pa.t() - pb.t()).norm() < 1e-10));
        }
    }

    #[test]
    fn triangulate_parallel_rays_fails() {
        let pose = RelativePose::new(Rotation3::identity(), Vec3::x());
        let pair = BearingPair::new(Vec3::z(), Vec3::z(), 0);
        assert_eq!(triangulate(&pose, &pair), Err(Error::DegenerateRays));
    }

    #[test]
    fn triangulate_recovers_point_and_depth_identity() {
        let rotation = Rotation3::from_scaled_axis(Vec3::new(0.02, -0.05, 0.01));
        let t = Vec3::new(0.8, -0.1, 0.3);
        let pose = RelativePose::new(rotation, t);
        // The pose carries a unit translation; build the point in that scale.
        let t_unit = pose.t();
        let point = Vec3::new(0.7, -0.4, 6.0);
        let right = rotation * point + t_unit;
        let pair = BearingPair::new(point, right, 0);
        let tri = triangulate(&pose, &pair).unwrap();
        assert_relative_eq!(tri.point, point, max_relative = 1e-9);
        let x = point / point.z;
        let xp = right / right.z;
        let lhs = xp * tri.depth_right;
        let rhs = rotation * x * tri.depth_left + t_unit;
        assert_relative_eq!(lhs, rhs, epsilon = 1e-9);
    }

    #[test]
    fn cheirality_of_empty_set_is_zero() {
        let pose = RelativePose::new(Rotation3::identity(), Vec3::x());
        assert_eq!(cheirality_count(&pose, &[]), 0);
    }

    #[test]
    fn angular_error_basics() {
        let r = Rotation3::from_scaled_axis(Vec3::new(0.3, 0.2, -0.1));
        assert_eq!(rotation_angular_error(r.matrix(), r.matrix()), 0.0);
        let axis = Unit::new_normalize(Vec3::new(1.0, -2.0, 0.5));
        let delta = Rotation3::from_axis_angle(&axis, 10f64.to_radians());
        let err = rotation_angular_error(r.matrix(), (r * delta).matrix());
        assert!((err - 10.0).abs() < 1e-9, "{err}");
    }

    #[test]
    fn angular_error_clamps_trace_overflow() {
        let slightly_big = Mat3::identity() * (1.0 + 1e-15 / 3.0);
        let err = rotation_angular_error(&Mat3::identity(), &slightly_big);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn kneip_single_row_is_exactly_zero() {
        let pair = BearingPair::new(Vec3::new(0.1, 0.2, 1.0), Vec3::new(0.3, -0.1, 1.0), 0);
        let diag = kneip_diagnostic(&Mat3::identity(), &[pair]);
        assert_eq!(diag.lambda_m, 0.0);
    }
}
