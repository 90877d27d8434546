//! Cubic essential-matrix constraints restricted to a three-dimensional
//! linear family, and the action matrices that solve them.
//!
//! Candidates are parameterized as `Q(a, b) = a Q1 + b Q2 + Q3`. The matrix
//! identity `Q Q^T Q - trace(Q Q^T) Q / 2 = 0` then gives nine cubic
//! polynomials in `(a, b)`, stored as rows of a 9x10 coefficient matrix over
//! the monomials
//!
//! ```text
//! a^3, a^2 b, a b^2, b^3, a^2, a b, b^2, a, b, 1
//! ```

use nalgebra::linalg::Schur;
use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::Mat3;

pub type Vec9 = SVector<f64, 9>;
pub type Mat6 = SMatrix<f64, 6, 6>;

/// Relative singular-value floor below which the cubic block is rejected.
pub const B1_CONDITION_FLOOR: f64 = 1e-10;
/// Relative tolerance of the pseudo-inverse of the cubic block.
pub const PINV_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PolySystem {
    /// Coefficients of the nine constraint polynomials.
    pub b: SMatrix<f64, 9, 10>,
    /// Reduced system `(I | M) y = 0`.
    pub m: SMatrix<f64, 4, 6>,
    /// Multiplication-by-`a` on `g = (a^2, ab, b^2, a, b, 1)`.
    pub c1: Mat6,
    /// Multiplication-by-`b` on `g`.
    pub c2: Mat6,
}

/// Column-major 9-vector to 3x3 matrix.
pub fn unvec(q: &Vec9) -> Mat3 {
    Mat3::from_column_slice(q.as_slice())
}

/// 3x3 matrix to its column-major 9-vector.
pub fn vec9(m: &Mat3) -> Vec9 {
    Vec9::from_column_slice(m.as_slice())
}

/// Column of the coefficient matrix for the monomial `a^i b^j`, `i + j <= 3`.
pub fn monomial_column(a_pow: usize, b_pow: usize) -> usize {
    match (a_pow, b_pow) {
        (3, 0) => 0,
        (2, 1) => 1,
        (1, 2) => 2,
        (0, 3) => 3,
        (2, 0) => 4,
        (1, 1) => 5,
        (0, 2) => 6,
        (1, 0) => 7,
        (0, 1) => 8,
        (0, 0) => 9,
        _ => unreachable!("monomial a^{a_pow} b^{b_pow} exceeds degree three"),
    }
}

/// Monomial vector `y(a, b)` in coefficient-column order.
pub fn monomials(a: f64, b: f64) -> SVector<f64, 10> {
    SVector::<f64, 10>::from_column_slice(&[
        a * a * a,
        a * a * b,
        a * b * b,
        b * b * b,
        a * a,
        a * b,
        b * b,
        a,
        b,
        1.0,
    ])
}

/// Expands the cubic constraint over the basis `(q1, q2, q3)`.
pub fn demazure_coefficients(basis: &[Vec9; 3]) -> SMatrix<f64, 9, 10> {
    let mats = basis.map(|q| unvec(&q));
    let mut coeffs = SMatrix::<f64, 9, 10>::zeros();
    // Index 0 carries `a`, index 1 carries `b`, index 2 the constant.
    for i in 0..3 {
        for j in 0..3 {
            let qq_t = mats[i] * mats[j].transpose();
            let half_trace = 0.5 * qq_t.trace();
            for k in 0..3 {
                let term = qq_t * mats[k] - mats[k] * half_trace;
                let idx = [i, j, k];
                let a_pow = idx.iter().filter(|&&v| v == 0).count();
                let b_pow = idx.iter().filter(|&&v| v == 1).count();
                let col = monomial_column(a_pow, b_pow);
                for (row, value) in term.iter().enumerate() {
                    coeffs[(row, col)] += value;
                }
            }
        }
    }
    coeffs
}

/// Builds the coefficient matrix, reduces it with the pseudo-inverse of its
/// cubic block, and assembles the two action matrices.
pub fn demazure_system(basis: &[Vec9; 3]) -> Result<PolySystem> {
    let b = demazure_coefficients(basis);
    let b1: SMatrix<f64, 9, 4> = b.fixed_columns::<4>(0).into_owned();
    let b2: SMatrix<f64, 9, 6> = b.fixed_columns::<6>(4).into_owned();

    let svd = b1.svd(true, true);
    let s = svd.singular_values;
    let s_max = s.max();
    let s_min = s.min();
    if !(s_max > 0.0) || s_min < B1_CONDITION_FLOOR * s_max {
        let ratio = if s_max > 0.0 { s_min / s_max } else { 0.0 };
        return Err(Error::IllConditionedB1(ratio));
    }
    let b1_pinv = svd
        .pseudo_inverse(PINV_TOLERANCE * s_max)
        .expect("svd computed with u and v_t");
    let m: SMatrix<f64, 4, 6> = b1_pinv * b2;

    // g = (a^2, ab, b^2, a, b, 1); a*g = (a^3, a^2b, ab^2, a^2, ab, a).
    let mut c1 = Mat6::zeros();
    for r in 0..3 {
        c1.set_row(r, &(-m.row(r)));
    }
    c1[(3, 0)] = 1.0;
    c1[(4, 1)] = 1.0;
    c1[(5, 3)] = 1.0;

    // b*g = (a^2b, ab^2, b^3, ab, b^2, b).
    let mut c2 = Mat6::zeros();
    for r in 0..3 {
        c2.set_row(r, &(-m.row(r + 1)));
    }
    c2[(3, 1)] = 1.0;
    c2[(4, 2)] = 1.0;
    c2[(5, 4)] = 1.0;

    Ok(PolySystem { b, m, c1, c2 })
}

/// Coefficients `(d3, d2, d1, d0)` of `det(a Q1 + Q2)` in powers of `a`.
pub fn determinant_cubic(q1: &Mat3, q2: &Mat3) -> [f64; 4] {
    // Multilinearity in columns: each coefficient sums the determinants with
    // a fixed number of columns drawn from Q1.
    let mut d = [0.0; 4];
    for mask in 0u8..8 {
        let mut m = Mat3::zeros();
        for col in 0..3 {
            let src = if mask & (1 << col) != 0 { q1 } else { q2 };
            m.set_column(col, &src.column(col));
        }
        let degree = mask.count_ones() as usize;
        d[3 - degree] += m.determinant();
    }
    d
}

/// Cap on Schur sweeps; the unbounded default can cycle forever on
/// ill-conditioned action matrices.
const SCHUR_MAX_ITERATIONS: usize = 500;

/// Eigenvalues of a real 6x6 matrix as `(re, im)` pairs. Empty when the
/// matrix is not finite or the Schur iteration does not converge.
pub fn eigenvalues(c: &Mat6) -> Vec<(f64, f64)> {
    if !c.iter().all(|v| v.is_finite()) {
        return Vec::new();
    }
    match Schur::try_new(*c, f64::EPSILON, SCHUR_MAX_ITERATIONS) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect(),
        None => Vec::new(),
    }
}

/// Right null vector of `C - lambda I` for a real eigenvalue `lambda`.
pub fn real_eigenvector(c: &Mat6, lambda: f64) -> SVector<f64, 6> {
    let shifted = c - Mat6::identity() * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("svd computed with v_t");
    let imin = svd.singular_values.imin();
    v_t.row(imin).transpose()
}

/// Smallest pairwise distance between eigenvalues (complex modulus).
pub fn min_eigen_gap(eigs: &[(f64, f64)]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in eigs.iter().enumerate() {
        for b in &eigs[i + 1..] {
            best = best.min((a.0 - b.0).hypot(a.1 - b.1));
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}
