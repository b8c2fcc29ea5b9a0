//! Singular values and null spaces via one-sided Jacobi.
//!
//! One-sided Jacobi orthogonalizes the columns of A by right rotations; at
//! convergence the column norms are the singular values and the accumulated
//! rotation matrix holds the right singular vectors. Small singular values
//! come out to absolute accuracy near machine epsilon times ‖A‖, which is
//! what kernel extraction needs.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, Ket};

const MAX_SVD_SWEEPS: usize = 60;

/// Singular values (descending) and right singular vectors of `a`.
pub fn singular_values_and_right_vectors(a: &ComplexMatrix) -> (Vec<f64>, Vec<Ket>) {
    let n = a.cols();
    let mut work = a.clone();
    let mut v = ComplexMatrix::identity(n);
    let eps = f64::EPSILON;

    for _sweep in 0..MAX_SVD_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = column_gram(&work, p, q);
                if gamma.norm() <= eps * (alpha * beta).sqrt() || gamma.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                rotate_columns(&mut work, &mut v, p, q, alpha, beta, gamma);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigmas: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let s: f64 = (0..work.rows()).map(|i| work[(i, j)].norm_sqr()).sum();
            (s.sqrt(), j)
        })
        .collect();
    sigmas.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());

    let values = sigmas.iter().map(|&(s, _)| s).collect();
    let vectors = sigmas.iter().map(|&(_, j)| v.column(j)).collect();
    (values, vectors)
}

/// (‖a_p‖², ‖a_q‖², a_p†a_q) for the column pair.
fn column_gram(a: &ComplexMatrix, p: usize, q: usize) -> (f64, f64, Complex64) {
    let mut alpha = 0.0;
    let mut beta = 0.0;
    let mut gamma = Complex64::default();
    for i in 0..a.rows() {
        let ap = a[(i, p)];
        let aq = a[(i, q)];
        alpha += ap.norm_sqr();
        beta += aq.norm_sqr();
        gamma += ap.conj() * aq;
    }
    (alpha, beta, gamma)
}

/// Right rotation making columns p and q orthogonal, accumulated into `v`.
fn rotate_columns(
    a: &mut ComplexMatrix,
    v: &mut ComplexMatrix,
    p: usize,
    q: usize,
    alpha: f64,
    beta: f64,
    gamma: Complex64,
) {
    // Diagonalize the Hermitian 2x2 Gram block [[alpha, gamma], [gamma*, beta]].
    let mag = gamma.norm();
    let w = gamma / mag;
    let b = (beta - alpha) / (2.0 * mag);
    let t = if b >= 0.0 {
        1.0 / (b + (1.0 + b * b).sqrt())
    } else {
        -1.0 / (-b + (1.0 + b * b).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    for i in 0..a.rows() {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * c - aiq * w.conj() * s;
        a[(i, q)] = aip * w * s + aiq * c;
    }
    for i in 0..v.rows() {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * c - viq * w.conj() * s;
        v[(i, q)] = vip * w * s + viq * c;
    }
}

/// Orthonormal basis of {x : ‖A x‖ ≤ tol}, i.e. right singular vectors with
/// singular value at or below `tol` (absolute).
pub fn null_space(a: &ComplexMatrix, tol: f64) -> Vec<Ket> {
    let (sigmas, vectors) = singular_values_and_right_vectors(a);
    sigmas
        .iter()
        .zip(vectors)
        .filter(|(s, _)| **s <= tol)
        .map(|(_, v)| v)
        .collect()
}

/// Number of singular values above `tol` (absolute).
pub fn rank(a: &ComplexMatrix, tol: f64) -> usize {
    let (sigmas, _) = singular_values_and_right_vectors(a);
    sigmas.iter().filter(|s| **s > tol).count()
}
