//! Nearest point of a convex hull given by its vertices.
//!
//! Solves `min ||V·λ - w||²` subject to `λ ≥ 0, Σλ = 1` with Wolfe's
//! minimum-norm-point algorithm, an active-set method that terminates in a
//! finite number of corral updates and returns an exact optimal support.

use nalgebra::{DMatrix, DVector};

/// Optimal convex combination and the resulting distance.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestPoint {
    /// `(vertex index, weight)` pairs with positive weight.
    pub weights: Vec<(usize, f64)>,
    pub point: [f64; 3],
    pub distance: f64,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn combine(pts: &[[f64; 3]], set: &[usize], coef: &[f64]) -> [f64; 3] {
    let mut x = [0.0; 3];
    for (&i, &c) in set.iter().zip(coef) {
        for k in 0..3 {
            x[k] += c * pts[i][k];
        }
    }
    x
}

/// Minimum-norm point of the affine hull of `pts[set]`, as affine coefficients.
fn affine_min_norm(pts: &[[f64; 3]], set: &[usize]) -> Vec<f64> {
    let n = set.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for (r, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate() {
            a[(r, c)] = dot(&pts[i], &pts[j]);
        }
        a[(r, n)] = 1.0;
        a[(n, r)] = 1.0;
    }
    let mut b = DVector::zeros(n + 1);
    b[n] = 1.0;
    let sol = a.clone().lu().solve(&b).filter(|s| s.iter().all(|v| v.is_finite()));
    let sol = match sol {
        Some(s) => s,
        None => a.svd(true, true).solve(&b, 1e-14).expect("SVD solve with U and V computed"),
    };
    sol.iter().take(n).copied().collect()
}

/// Nearest point of `conv(vertices)` to `query`.
pub fn nearest_point(vertices: &[[f64; 3]], query: &[f64; 3]) -> NearestPoint {
    assert!(!vertices.is_empty(), "nearest_point needs at least one vertex");
    let pts: Vec<[f64; 3]> = vertices.iter().map(|v| [v[0] - query[0], v[1] - query[1], v[2] - query[2]]).collect();
    let scale = pts.iter().map(|p| dot(p, p)).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;

    let start = (0..pts.len()).min_by(|&a, &b| dot(&pts[a], &pts[a]).total_cmp(&dot(&pts[b], &pts[b]))).unwrap();
    let mut set = vec![start];
    let mut lambda = vec![1.0];
    let mut x = pts[start];

    for _major in 0..(10 * pts.len() + 50) {
        let xx = dot(&x, &x);
        if xx <= tol {
            break;
        }
        let (j, xp) = (0..pts.len()).map(|j| (j, dot(&x, &pts[j]))).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        if xx - xp <= 1e-12 * xx.max(tol) || set.contains(&j) {
            break;
        }
        set.push(j);
        lambda.push(0.0);

        for _minor in 0..(set.len() + 4) {
            let mu = affine_min_norm(&pts, &set);
            if mu.iter().all(|&m| m > 1e-14) {
                lambda = mu;
                break;
            }
            // Move toward the affine minimiser until a weight hits zero, then drop it.
            let mut theta = 1.0f64;
            for (&l, &m) in lambda.iter().zip(&mu) {
                if m <= 1e-14 && l - m > 0.0 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * m;
            }
            let mut k = 0;
            while k < set.len() {
                if lambda[k] <= 1e-14 {
                    set.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
        }
        let xn = combine(&pts, &set, &lambda);
        if dot(&xn, &xn) >= xx {
            break;
        }
        x = xn;
    }

    let point = combine(vertices, &set, &lambda);
    NearestPoint { weights: set.into_iter().zip(lambda).collect(), point, distance: dot(&x, &x).sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vertex_query_is_zero() {
        let v = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for q in &v {
            assert_eq!(nearest_point(&v, q).distance, 0.0);
        }
    }

    #[test]
    fn centroid_is_inside() {
        let v = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let np = nearest_point(&v, &[0.25, 0.25, 0.25]);
        assert!(np.distance < 1e-12);
        assert_abs_diff_eq!(np.weights.iter().map(|w| w.1).sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn face_edge_and_vertex_regions() {
        let v = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        // Beyond the slanted face x+y+z=1.
        let d = nearest_point(&v, &[1.0, 1.0, 1.0]).distance;
        assert_abs_diff_eq!(d, 2.0 / 3f64.sqrt(), epsilon = 1e-12);
        // Beyond the vertex (1,0,0).
        assert_abs_diff_eq!(nearest_point(&v, &[2.0, 0.0, 0.0]).distance, 1.0, epsilon = 1e-12);
        // Below the edge from (0,0,0) to (1,0,0).
        let np = nearest_point(&v, &[0.5, -1.0, -1.0]);
        assert_abs_diff_eq!(np.distance, 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(np.point[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn single_point_and_segment() {
        let d = nearest_point(&[[1.0, 2.0, 3.0]], &[1.0, 2.0, 5.0]).distance;
        assert_abs_diff_eq!(d, 2.0, epsilon = 1e-15);
        let seg = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert_abs_diff_eq!(nearest_point(&seg, &[1.0, 3.0, 4.0]).distance, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn duplicated_and_coplanar_vertices() {
        let v = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.5, 0.5, 0.0]];
        let np = nearest_point(&v, &[0.3, 0.6, 2.0]);
        assert_abs_diff_eq!(np.distance, 2.0, epsilon = 1e-12);
        let np = nearest_point(&v, &[2.0, 0.5, 0.0]);
        assert_abs_diff_eq!(np.distance, 1.0, epsilon = 1e-12);
    }
}
