//! Real roots of low-degree polynomials.

/// Real roots of `c[0] z^3 + c[1] z^2 + c[2] z + c[3]`.
///
/// Leading coefficients below `1e-12` of the largest magnitude are treated as
/// zero, so the degree drops to a quadratic or linear equation instead of
/// producing huge spurious roots. An identically zero polynomial has no roots.
pub fn cubic_real_roots(c: [f64; 4]) -> Vec<f64> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Vec::new();
    }
    let c = c.map(|v| v / scale);
    let tol = 1e-12;

    let mut roots = if c[0].abs() > tol {
        monic_cubic_roots(c[1] / c[0], c[2] / c[0], c[3] / c[0])
    } else if c[1].abs() > tol {
        quadratic_real_roots(c[1], c[2], c[3])
    } else if c[2].abs() > tol {
        vec![-c[3] / c[2]]
    } else {
        Vec::new()
    };

    // Newton polishing on the full (possibly tiny-leading) polynomial.
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((c[0] * *r + c[1]) * *r + c[2]) * *r + c[3];
            let df = (3.0 * c[0] * *r + 2.0 * c[1]) * *r + c[2];
            if df.abs() < 1e-300 {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots.retain(|r| r.is_finite());
    roots.sort_by(f64::total_cmp);
    roots
}

fn quadratic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    // Cancellation-free form.
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![q / a, c / q]
}

/// Roots of `z^3 + a z^2 + b z + c`.
fn monic_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let q = (a * a - 3.0 * b) / 9.0;
    let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    let shift = a / 3.0;
    let q3 = q * q * q;
    if r * r < q3 {
        let theta = (r / q3.sqrt()).clamp(-1.0, 1.0).acos();
        let m = -2.0 * q.sqrt();
        let tau = std::f64::consts::TAU;
        vec![
            m * (theta / 3.0).cos() - shift,
            m * ((theta + tau) / 3.0).cos() - shift,
            m * ((theta - tau) / 3.0).cos() - shift,
        ]
    } else {
        let big_a = -r.signum() * (r.abs() + (r * r - q3).sqrt()).cbrt();
        let big_b = if big_a == 0.0 { 0.0 } else { q / big_a };
        vec![big_a + big_b - shift]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_distinct_roots() {
        // (z-1)(z-2)(z-3) = z^3 - 6z^2 + 11z - 6
        let roots = cubic_real_roots([1.0, -6.0, 11.0, -6.0]);
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip([1.0, 2.0, 3.0]) {
            assert!((r - e).abs() < 1e-12, "{r} vs {e}");
        }
    }

    #[test]
    fn single_real_root() {
        // (z-2)(z^2+1)
        let roots = cubic_real_roots([1.0, -2.0, 1.0, -2.0]);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degree_drop_to_quadratic() {
        let roots = cubic_real_roots([1e-17, 1.0, -3.0, 2.0]);
        assert_eq!(roots.len(), 2);
        assert!(roots.iter().all(|r| r.is_finite()));
        assert!((roots[0] - 1.0).abs() < 1e-12 && (roots[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_polynomial_has_no_roots() {
        assert!(cubic_real_roots([0.0; 4]).is_empty());
    }
}
