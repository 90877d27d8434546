//! Weighted linear relative pose from `n >= 6` correspondences.
//!
//! The epipolar rows of all pairs are stacked into a weighted `n x 9` design
//! matrix. The right singular vectors of its three smallest singular values
//! span a family that contains the essential matrix both for generic scenes
//! (rank 8) and for planar scenes or pure rotation (rank 6). Up to eighteen
//! candidates are drawn from that family:
//!
//! * up to twelve from the eigenvectors of the two 6x6 action matrices of the
//!   cubic essential-matrix constraints (`Q = a Q1 + b Q2 + Q3`),
//! * up to three from the real roots of `det(a Q1 + Q2) = 0`,
//! * the three basis vectors themselves.
//!
//! Each candidate is projected onto the essential manifold and decomposed
//! into four poses. Poses for which most of the (weighted) pairs do not
//! triangulate in front of both cameras are discarded, and the survivor with
//! the smallest summed PPO residual wins.

pub mod roots;
pub mod system;

use nalgebra::{DMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::{decompose_essential, is_cheiral, project_to_essential, BearingPair, Mat3, RelativePose};
use crate::residuals::{residual_ppo, BEARING_SATURATION};

pub use roots::cubic_real_roots;
pub use system::{demazure_system, determinant_cubic, unvec, vec9, PolySystem, Vec9};

/// Weights at or below this value do not count as effective rows.
pub const EFFECTIVE_WEIGHT: f64 = 1e-9;
/// Eigenvalues with `|im| <= REALNESS * (1 + |re|)` are treated as real.
pub const REALNESS: f64 = 1e-6;
/// Eigenvectors with `|g6| <= DEHOMOGENIZE_GUARD * |g|` are dropped.
pub const DEHOMOGENIZE_GUARD: f64 = 1e-9;
pub const MIN_PAIRS: usize = 6;

/// Right singular vectors of the three smallest singular values of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullspaceBasis {
    /// `q[0]`, `q[1]`, `q[2]` pair with `singular_values[0] >= [1] >= [2]`.
    pub q: [Vec9; 3],
    pub singular_values: [f64; 3],
    /// Full spectrum of `A`, descending.
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case1Candidates {
    pub candidates: Vec<Vec9>,
    /// Eigenvalues of the multiplication-by-`a` matrix.
    pub eigenvalues_c1: Vec<(f64, f64)>,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LirpDiagnostics {
    /// Smallest pairwise eigenvalue distance of the multiplication-by-`a`
    /// action matrix; zero when the action matrices could not be built.
    pub d_min: f64,
    pub n_candidates: usize,
    /// Best summed PPO residual per candidate, `+inf` when none of its four
    /// poses passes the chirality filter.
    pub candidate_scores: Vec<f64>,
    pub sigma3: f64,
    pub selected_candidate: usize,
    pub case1_dropped: usize,
    pub case1_available: bool,
}

/// Row `i` is `w_i (x_i^T kron x'_i^T)`, so `A_i vec(Q) = w_i x'_i^T Q x_i`
/// with column-major `vec`.
pub fn build_weighted_a(pairs: &[BearingPair], weights: &[f64]) -> Result<DMatrix<f64>> {
    if weights.len() != pairs.len() {
        return Err(Error::WeightLengthMismatch {
            pairs: pairs.len(),
            weights: weights.len(),
        });
    }
    let effective = weights.iter().filter(|&&w| w > EFFECTIVE_WEIGHT).count();
    if effective < MIN_PAIRS {
        return Err(Error::TooFewEffectivePairs(effective));
    }
    let mut a = DMatrix::zeros(pairs.len(), 9);
    for (i, (pair, &w)) in pairs.iter().zip(weights).enumerate() {
        for c in 0..3 {
            for r in 0..3 {
                a[(i, 3 * c + r)] = w * pair.x[c] * pair.x_prime[r];
            }
        }
    }
    Ok(a)
}

/// Three-dimensional approximate null space of the design matrix.
pub fn nullspace3(a: &DMatrix<f64>) -> NullspaceBasis {
    // Thin SVD only yields min(rows, 9) right vectors; zero rows leave the
    // right singular vectors unchanged.
    let padded = if a.nrows() < 9 {
        let mut p = DMatrix::zeros(9, 9);
        p.view_mut((0, 0), (a.nrows(), 9)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("svd computed with v_t");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let spectrum: Vec<f64> = order.iter().map(|&i| s[i]).collect();

    let pick = |k: usize| -> Vec9 {
        let idx = order[order.len() - 3 + k];
        canonical_sign(Vec9::from_iterator(v_t.row(idx).iter().copied()))
    };
    NullspaceBasis {
        q: [pick(0), pick(1), pick(2)],
        singular_values: [
            spectrum[spectrum.len() - 3],
            spectrum[spectrum.len() - 2],
            spectrum[spectrum.len() - 1],
        ],
        spectrum,
    }
}

/// Fixes the sign so that the largest-magnitude entry is positive.
fn canonical_sign(v: Vec9) -> Vec9 {
    let imax = v.iamax();
    if v[imax] < 0.0 {
        -v
    } else {
        v
    }
}

/// Candidates from the eigenvectors of both action matrices.
pub fn candidates_case1(system: &PolySystem, basis: &NullspaceBasis) -> Case1Candidates {
    let mut candidates = Vec::with_capacity(12);
    let mut dropped = 0;
    let eigenvalues_c1 = system::eigenvalues(&system.c1);
    for (c, eigs) in [
        (&system.c1, eigenvalues_c1.clone()),
        (&system.c2, system::eigenvalues(&system.c2)),
    ] {
        for (re, im) in eigs {
            if im.abs() > REALNESS * (1.0 + re.abs()) {
                dropped += 1;
                continue;
            }
            let g = system::real_eigenvector(c, re);
            if g[5].abs() <= DEHOMOGENIZE_GUARD * g.norm() {
                dropped += 1;
                continue;
            }
            let a = g[3] / g[5];
            let b = g[4] / g[5];
            let q = basis.q[0] * a + basis.q[1] * b + basis.q[2];
            let norm = q.norm();
            if !norm.is_finite() || norm == 0.0 {
                dropped += 1;
                continue;
            }
            candidates.push(q / norm);
        }
    }
    Case1Candidates {
        candidates,
        eigenvalues_c1,
        dropped,
    }
}

/// Candidates `a q1 + q2` from the real roots of `det(a Q1 + Q2) = 0`,
/// followed by `q1`, `q2`, `q3`.
pub fn candidates_case2(basis: &NullspaceBasis) -> Vec<Vec9> {
    let [q1, q2, q3] = &basis.q;
    let d = determinant_cubic(&unvec(q1), &unvec(q2));
    let mut out: Vec<Vec9> = cubic_real_roots(d)
        .into_iter()
        .map(|a| q1 * a + q2)
        .filter_map(|q| {
            let n = q.norm();
            (n.is_finite() && n > 0.0).then(|| q / n)
        })
        .collect();
    out.extend([*q1, *q2, *q3]);
    out
}

/// Candidate essential matrices of one solve, before identification.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub basis: NullspaceBasis,
    /// Unit 9-vectors: case-1 candidates, then case-2 roots, then the basis.
    pub candidates: Vec<Vec9>,
    pub d_min: f64,
    pub case1_dropped: usize,
    pub case1_available: bool,
}

/// Pairs and weights sorted by value, so that the solver output does not
/// depend on input order even at the rounding level.
fn canonical_order(pairs: &[BearingPair], weights: Option<&[f64]>) -> Result<(Vec<BearingPair>, Vec<f64>)> {
    let weights = weights.map_or_else(|| vec![1.0; pairs.len()], <[f64]>::to_vec);
    if weights.len() != pairs.len() {
        return Err(Error::WeightLengthMismatch {
            pairs: pairs.len(),
            weights: weights.len(),
        });
    }
    let key = |i: usize| {
        let p = &pairs[i];
        [p.x.x, p.x.y, p.x.z, p.x_prime.x, p.x_prime.y, p.x_prime.z, weights[i]]
    };
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&i, &j| {
        key(i)
            .iter()
            .zip(key(j).iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok((
        order.iter().map(|&i| pairs[i]).collect(),
        order.iter().map(|&i| weights[i]).collect(),
    ))
}

/// Builds all candidates for the (optionally weighted) pairs.
pub fn lirp_candidates(pairs: &[BearingPair], weights: Option<&[f64]>) -> Result<CandidateSet> {
    let (pairs, weights) = canonical_order(pairs, weights)?;
    let a = build_weighted_a(&pairs, &weights)?;
    let basis = nullspace3(&a);

    let (mut candidates, d_min, dropped, available) = match demazure_system(&basis.q) {
        Ok(system) => {
            let c1 = candidates_case1(&system, &basis);
            let gap = system::min_eigen_gap(&c1.eigenvalues_c1);
            (c1.candidates, gap, c1.dropped, true)
        }
        Err(_) => (Vec::new(), 0.0, 0, false),
    };
    candidates.extend(candidates_case2(&basis));
    Ok(CandidateSet {
        basis,
        candidates,
        d_min,
        case1_dropped: dropped,
        case1_available: available,
    })
}

/// Runs the full solver. `weights` defaults to all ones.
pub fn lirp_solve(pairs: &[BearingPair], weights: Option<&[f64]>) -> Result<(RelativePose, LirpDiagnostics)> {
    let set = lirp_candidates(pairs, weights)?;
    let (pairs, weights) = canonical_order(pairs, weights)?;
    identify(&set, &pairs, &weights, 0..set.candidates.len())
}

/// Identification against a known essential matrix: the candidate closest
/// in direction to `e_ref` is kept, and its pose is chosen by the usual
/// chirality and PPO rule. Used to score candidate generation on its own.
pub fn lirp_solve_with_reference(
    pairs: &[BearingPair],
    weights: Option<&[f64]>,
    e_ref: &Mat3,
) -> Result<(RelativePose, LirpDiagnostics)> {
    let set = lirp_candidates(pairs, weights)?;
    let (pairs, weights) = canonical_order(pairs, weights)?;
    let r = vec9(e_ref);
    let r = r / r.norm();
    let mut nearest = 0;
    let mut best_cos = -1.0;
    for (i, q) in set.candidates.iter().enumerate() {
        let e = vec9(&project_to_essential(&unvec(q)));
        let cos = (e.dot(&r) / e.norm()).abs();
        if cos > best_cos {
            best_cos = cos;
            nearest = i;
        }
    }
    identify(&set, &pairs, &weights, nearest..nearest + 1)
}

fn identify(
    set: &CandidateSet,
    pairs: &[BearingPair],
    weights: &[f64],
    allowed: std::ops::Range<usize>,
) -> Result<(RelativePose, LirpDiagnostics)> {
    let total_weight: f64 = weights.iter().filter(|&&w| w > 0.0).sum();
    let mut scores = Vec::with_capacity(set.candidates.len());
    let mut best: Option<(f64, usize, RelativePose)> = None;
    for (idx, q) in set.candidates.iter().enumerate() {
        let e = project_to_essential(&unvec(q));
        let mut cand_best = f64::INFINITY;
        if let Ok(poses) = decompose_essential(&e) {
            for pose in poses {
                let Some(score) = identification_score(&pose, pairs, weights, total_weight) else {
                    continue;
                };
                cand_best = cand_best.min(score);
                if allowed.contains(&idx) && best.as_ref().map_or(true, |(s, _, _)| score < *s) {
                    best = Some((score, idx, pose));
                }
            }
        }
        scores.push(cand_best);
    }

    let (_, selected, pose) = best.ok_or(Error::NoValidCandidate)?;
    let diagnostics = LirpDiagnostics {
        d_min: set.d_min,
        n_candidates: set.candidates.len(),
        candidate_scores: scores,
        sigma3: set.basis.singular_values[2],
        selected_candidate: selected,
        case1_dropped: set.case1_dropped,
        case1_available: set.case1_available,
    };
    Ok((pose, diagnostics))
}

/// Weighted PPO sum of a pose, or `None` when the weighted majority of the
/// pairs fails the chirality test.
fn identification_score(pose: &RelativePose, pairs: &[BearingPair], weights: &[f64], total_weight: f64) -> Option<f64> {
    let mut cheiral_weight = 0.0;
    let mut score = 0.0;
    for (pair, &w) in pairs.iter().zip(weights) {
        if w <= 0.0 {
            continue;
        }
        if is_cheiral(pose, pair) {
            cheiral_weight += w;
        }
        let v = residual_ppo(pose, pair).map_or(BEARING_SATURATION, |(v, _)| v);
        score += w * v;
    }
    (cheiral_weight > 0.5 * total_weight).then_some(score)
}

/// Evaluates `y(a, b)` against the reduced system; used to check planted
/// roots in tests.
pub fn reduced_residual(system: &PolySystem, a: f64, b: f64) -> SVector<f64, 4> {
    let y = system::monomials(a, b);
    let y1 = y.fixed_rows::<4>(0).into_owned();
    let y2 = y.fixed_rows::<6>(4).into_owned();
    y1 + system.m * y2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn basis_pair(x: Vec3, xp: Vec3) -> BearingPair {
        BearingPair::new(x, xp, 0)
    }

    #[test]
    fn basis_pair_row_hits_last_slot() {
        let pairs = vec![basis_pair(Vec3::z(), Vec3::z()); 6];
        let a = build_weighted_a(&pairs, &[1.0; 6]).unwrap();
        let mut expected = [0.0; 9];
        expected[8] = 1.0;
        assert_eq!(a.row(0).iter().copied().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn five_effective_pairs_are_rejected() {
        let pairs = vec![basis_pair(Vec3::z(), Vec3::z()); 8];
        let w = [1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1e-12];
        assert_eq!(
            build_weighted_a(&pairs, &w).unwrap_err(),
            Error::TooFewEffectivePairs(5)
        );
    }

    #[test]
    fn weight_length_is_checked() {
        let pairs = vec![basis_pair(Vec3::z(), Vec3::z()); 6];
        assert!(matches!(
            build_weighted_a(&pairs, &[1.0; 5]),
            Err(Error::WeightLengthMismatch { .. })
        ));
    }

    #[test]
    fn case2_appends_basis_at_tail() {
        let q = |s: f64| Vec9::from_fn(|i, _| (s * (i as f64 + 1.0)).sin()).normalize();
        let basis = NullspaceBasis {
            q: [q(0.3), q(1.1), q(2.3)],
            singular_values: [0.0; 3],
            spectrum: vec![],
        };
        let out = candidates_case2(&basis);
        let n = out.len();
        assert!(n >= 3 && n <= 6);
        assert_eq!(out[n - 3], basis.q[0]);
        assert_eq!(out[n - 2], basis.q[1]);
        assert_eq!(out[n - 1], basis.q[2]);
    }
}
