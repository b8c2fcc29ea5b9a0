//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is a pure function of its inputs: values are freely
//! shareable across threads and nothing mutates after construction.

mod eig;
mod matrix;
mod svd;

use num_complex::Complex64;

pub use eig::{
    general_eigenvalues, hermitian_eigen, hermitian_eigenvalues, min_hermitian_eigenvalue,
};
pub use matrix::{anticommutator, commutator, ComplexMatrix, Ket};
pub use svd::{null_space, rank, singular_values_and_right_vectors};

use crate::error::{Error, Result};

/// Default clustering / verification tolerance used across the crate.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Modified Gram–Schmidt with a re-orthogonalization pass.
///
/// Returns an orthonormal set spanning the same space as the input. Fails
/// with [`Error::DegenerateSet`] when an input vector is linearly dependent
/// on its predecessors below `tol` times the largest input norm.
pub fn gram_schmidt(vectors: &[Ket], tol: f64) -> Result<Vec<Ket>> {
    assert!(tol > 0.0, "tolerance must be positive");
    let Some(first) = vectors.first() else {
        return Ok(Vec::new());
    };
    let dim = first.dim();
    let max_norm = vectors.iter().map(Ket::norm).fold(0.0, f64::max);
    let floor = tol * max_norm;

    let mut out: Vec<Ket> = Vec::with_capacity(vectors.len());
    for v in vectors {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        let mut u = v.clone();
        for _pass in 0..2 {
            for q in &out {
                let overlap = q.inner(&u);
                u.add_scaled(-overlap, q);
            }
        }
        let n = u.norm();
        if n <= floor {
            return Err(Error::DegenerateSet { tol });
        }
        out.push(u.scale(Complex64::new(1.0 / n, 0.0)));
    }
    Ok(out)
}

/// Orthonormally extend `vectors` (assumed orthonormal) to a full basis of
/// the ambient space, picking the canonical axis with the largest residual
/// at each step. Deterministic; ties broken by the lowest index.
pub fn complete_basis(vectors: &[Ket], dim: usize) -> Result<Vec<Ket>> {
    let mut out = vectors.to_vec();
    let extra = canonical_complement(vectors, dim)?;
    out.extend(extra);
    Ok(out)
}

/// Canonical orthonormal basis of the orthogonal complement of
/// `span(vectors)` inside an ambient space of dimension `dim`.
pub fn canonical_complement(vectors: &[Ket], dim: usize) -> Result<Vec<Ket>> {
    let mut projector = ComplexMatrix::identity(dim);
    for v in vectors {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        projector.add_scaled(Complex64::new(-1.0, 0.0), &v.projector());
    }
    canonical_subspace_basis(&projector, dim - vectors.len())
}

/// Deterministic orthonormal basis of the range of an (approximate)
/// orthogonal projector.
///
/// Pivoted modified Gram–Schmidt over the projector columns: the column with
/// the largest residual norm is selected at each step (ties broken by the
/// lowest index), so the result depends only on the subspace, not on the
/// basis that produced the projector. When the projector is block diagonal
/// the selected vectors stay confined to single blocks, which keeps the
/// output stable ("golden") across runs and smooth along parameter sweeps as
/// long as the pivot order does not change.
pub fn canonical_subspace_basis(projector: &ComplexMatrix, count: usize) -> Result<Vec<Ket>> {
    let n = projector.require_square()?;
    assert!(count <= n);
    let mut residuals: Vec<Ket> = (0..n).map(|j| projector.column(j)).collect();
    let mut out: Vec<Ket> = Vec::with_capacity(count);

    while out.len() < count {
        let mut best = 0;
        let mut best_norm = -1.0;
        for (j, r) in residuals.iter().enumerate() {
            let nrm = r.norm();
            if nrm > best_norm {
                best = j;
                best_norm = nrm;
            }
        }
        if best_norm <= 1e-7 {
            return Err(Error::DegenerateSet { tol: 1e-7 });
        }
        let mut v = residuals[best].clone();
        // Re-orthogonalize against what we already accepted.
        for _pass in 0..2 {
            for q in &out {
                let overlap = q.inner(&v);
                v.add_scaled(-overlap, q);
            }
        }
        let v = v.normalized().fix_phase();
        for r in &mut residuals {
            let overlap = v.inner(r);
            r.add_scaled(-overlap, &v);
        }
        out.push(v);
    }
    Ok(out)
}

/// Matrix exponential by scaling-and-squaring around a truncated series.
///
/// The argument is scaled down until its Frobenius norm is at most 1/4, the
/// series is summed to machine precision, and the result is squared back up.
/// Accurate to ~1e-12 for ‖A‖ ≤ 10; anti-Hermitian input yields a unitary
/// result to the same level.
pub fn matrix_exponential(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square()?;
    let norm = a.frobenius_norm();
    if !norm.is_finite() {
        return Err(Error::StateInvariantViolated {
            what: "matrix entries",
            t: f64::NAN,
            value: norm,
            tol: f64::INFINITY,
        });
    }
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale(Complex64::new(0.5f64.powi(squarings as i32), 0.0));

    let mut result = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=24 {
        term = term.matmul(&scaled);
        term.scale_mut(Complex64::new(1.0 / k as f64, 0.0));
        result.add_scaled(Complex64::new(1.0, 0.0), &term);
        if term.frobenius_norm() <= 1e-18 * result.frobenius_norm() {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}

/// A joint eigenspace: one eigenvalue per operator, and an orthonormal basis
/// of the simultaneous eigenvectors carrying exactly that eigenvalue tuple.
#[derive(Debug, Clone)]
pub struct JointEigenspace {
    pub eigenvalues: Vec<Complex64>,
    pub basis: Vec<Ket>,
}

/// Simultaneous eigenspaces of a family of (possibly non-normal) operators.
///
/// The first operator is eigendecomposed (eigenvalue candidates from the QR
/// iteration, eigenspaces as SVD null spaces of the shifted operator); each
/// remaining operator is then restricted to the surviving subspaces and the
/// same split is applied. Vectors sharing one eigenvalue tuple are grouped.
///
/// Non-normal operators can have eigenspaces that overlap non-orthogonally.
/// Candidate spaces are therefore processed in ascending order of eigenvalue
/// magnitude and a vector is kept only if it remains an eigenvector after
/// projecting out the spaces accepted before it, so the returned collection
/// is always mutually orthogonal. For normal operators nothing is discarded
/// and the result is the full spectral decomposition.
pub fn joint_eigenspaces(ops: &[ComplexMatrix], tol: f64) -> Result<Vec<JointEigenspace>> {
    assert!(tol > 0.0, "tolerance must be positive");
    let Some(first) = ops.first() else {
        return Ok(Vec::new());
    };
    let n = first.require_square()?;
    for op in ops {
        let m = op.require_square()?;
        if m != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m,
            });
        }
    }

    // Start from the full space and split it one operator at a time.
    let full = (0..n).map(|j| Ket::basis_state(n, j)).collect();
    let mut groups = vec![JointEigenspace {
        eigenvalues: Vec::new(),
        basis: full,
    }];

    for op in ops {
        let scale = op.frobenius_norm().max(1.0);
        let abs_tol = tol * scale;
        let mut next = Vec::new();
        for group in &groups {
            let k = group.basis.len();
            let restricted = restrict(op, &group.basis);
            let candidates = if k == 1 {
                vec![restricted[(0, 0)]]
            } else {
                general_eigenvalues(&restricted)?
            };
            for center in cluster_eigenvalues(&candidates, abs_tol) {
                // Null space of (F - cI)B in subspace coordinates.
                let shifted = shifted_on_basis(op, center, &group.basis);
                let coords = null_space(&shifted, abs_tol);
                if coords.is_empty() {
                    continue;
                }
                let basis: Vec<Ket> = coords.iter().map(|x| combine(&group.basis, x)).collect();
                // Refine the eigenvalue as the mean Rayleigh quotient.
                let refined = basis
                    .iter()
                    .map(|v| v.inner(&op.matvec(v)))
                    .sum::<Complex64>()
                    / basis.len() as f64;
                let mut eigenvalues = group.eigenvalues.clone();
                eigenvalues.push(refined);
                next.push(JointEigenspace { eigenvalues, basis });
            }
        }
        groups = next;
    }

    prune_to_orthogonal(ops, groups, tol)
}

/// B† F B for an orthonormal basis B given as kets.
fn restrict(op: &ComplexMatrix, basis: &[Ket]) -> ComplexMatrix {
    let k = basis.len();
    let mut out = ComplexMatrix::zeros(k, k);
    let images: Vec<Ket> = basis.iter().map(|b| op.matvec(b)).collect();
    for (i, bi) in basis.iter().enumerate() {
        for (j, img) in images.iter().enumerate() {
            out[(i, j)] = bi.inner(img);
        }
    }
    out
}

/// Columns of (F - cI)B, an n×k matrix acting on subspace coordinates.
fn shifted_on_basis(op: &ComplexMatrix, c: Complex64, basis: &[Ket]) -> ComplexMatrix {
    let n = op.rows();
    let k = basis.len();
    let mut out = ComplexMatrix::zeros(n, k);
    for (j, b) in basis.iter().enumerate() {
        let mut img = op.matvec(b);
        img.add_scaled(-c, b);
        for i in 0..n {
            out[(i, j)] = img[i];
        }
    }
    out
}

fn combine(basis: &[Ket], coords: &Ket) -> Ket {
    let mut out = Ket::zeros(basis[0].dim());
    for (b, &x) in basis.iter().zip(coords.data()) {
        out.add_scaled(x, b);
    }
    out
}

/// Union-find agglomeration of eigenvalue candidates within `tol`.
fn cluster_eigenvalues(values: &[Complex64], tol: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut sums: std::collections::BTreeMap<usize, (Complex64, usize)> = Default::default();
    for (i, &value) in values.iter().enumerate() {
        let r = find(&mut parent, i);
        let e = sums.entry(r).or_insert((Complex64::default(), 0));
        e.0 += value;
        e.1 += 1;
    }
    let mut centers: Vec<Complex64> = sums
        .values()
        .map(|&(sum, count)| sum / count as f64)
        .collect();
    centers.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    centers
}

/// Keep a maximal mutually orthogonal collection of joint eigenspaces,
/// preferring small eigenvalue tuples (kernels first), and canonicalize each
/// surviving basis.
fn prune_to_orthogonal(
    ops: &[ComplexMatrix],
    mut groups: Vec<JointEigenspace>,
    tol: f64,
) -> Result<Vec<JointEigenspace>> {
    groups.sort_by(|a, b| {
        let ma: f64 = a.eigenvalues.iter().map(|z| z.norm_sqr()).sum();
        let mb: f64 = b.eigenvalues.iter().map(|z| z.norm_sqr()).sum();
        ma.partial_cmp(&mb).unwrap().then_with(|| {
            tuple_key(&a.eigenvalues)
                .partial_cmp(&tuple_key(&b.eigenvalues))
                .unwrap()
        })
    });

    let mut accepted_vectors: Vec<Ket> = Vec::new();
    let mut out: Vec<JointEigenspace> = Vec::new();
    for group in groups {
        let mut survivors: Vec<Ket> = Vec::new();
        for v in &group.basis {
            let mut u = v.clone();
            for _pass in 0..2 {
                for q in accepted_vectors.iter().chain(survivors.iter()) {
                    let overlap = q.inner(&u);
                    u.add_scaled(-overlap, q);
                }
            }
            let nrm = u.norm();
            if nrm <= 1e-8 {
                continue;
            }
            let u = u.scale(Complex64::new(1.0 / nrm, 0.0));
            let still_eigen = ops.iter().zip(&group.eigenvalues).all(|(op, &c)| {
                let mut img = op.matvec(&u);
                img.add_scaled(-c, &u);
                img.norm() <= tol * op.frobenius_norm().max(1.0)
            });
            if still_eigen {
                survivors.push(u);
            }
        }
        if survivors.is_empty() {
            continue;
        }
        // Canonicalize: basis of the projector, deterministic and block-clean.
        let mut projector = ComplexMatrix::zeros(survivors[0].dim(), survivors[0].dim());
        for v in &survivors {
            projector.add_scaled(Complex64::new(1.0, 0.0), &v.projector());
        }
        let basis = canonical_subspace_basis(&projector, survivors.len())?;
        accepted_vectors.extend(basis.iter().cloned());
        out.push(JointEigenspace {
            eigenvalues: group.eigenvalues,
            basis,
        });
    }
    Ok(out)
}

fn tuple_key(values: &[Complex64]) -> Vec<(f64, f64)> {
    values.iter().map(|z| (z.re, z.im)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gram_schmidt_canonical_pair() {
        let input = vec![
            Ket::from_real(&[1.0, 0.0, 0.0]),
            Ket::from_real(&[1.0, 1.0, 0.0]),
        ];
        let out = gram_schmidt(&input, 1e-12).unwrap();
        assert!((out[0].data()[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((out[1].data()[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(out[1].data()[0].norm() < 1e-15);
    }

    #[test]
    fn gram_schmidt_rejects_rank_deficient_input() {
        let input = vec![Ket::from_real(&[1.0, 0.0]), Ket::from_real(&[2.0, 0.0])];
        match gram_schmidt(&input, 1e-12) {
            Err(Error::DegenerateSet { .. }) => {}
            other => panic!("expected DegenerateSet, got {other:?}"),
        }
    }

    #[test]
    fn gram_schmidt_output_is_orthonormal() {
        let input = vec![
            Ket::new(vec![c(1.0, 0.2), c(0.0, 1.0), c(0.3, 0.0)]),
            Ket::new(vec![c(0.9, 0.0), c(0.5, -0.5), c(0.0, 0.0)]),
            Ket::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0)]),
        ];
        let out = gram_schmidt(&input, 1e-12).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let g = out[i].inner(&out[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(expect, 0.0)).norm() < 1e-12, "({i},{j}): {g}");
            }
        }
    }

    #[test]
    fn complete_basis_fills_the_space() {
        let v = Ket::new(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let full = complete_basis(&[v], 2).unwrap();
        assert_eq!(full.len(), 2);
        for i in 0..2 {
            for j in 0..2 {
                let g = full[i].inner(&full[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matrix_exponential_of_zero_is_identity() {
        let z = ComplexMatrix::zeros(3, 3);
        let e = matrix_exponential(&z).unwrap();
        assert!((&e - &ComplexMatrix::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn matrix_exponential_of_diagonal() {
        use std::f64::consts::PI;
        let a = ComplexMatrix::diagonal(&[c(0.0, PI), c(0.0, 0.0)]);
        let e = matrix_exponential(&a).unwrap();
        assert!((e[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((e[(1, 1)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15 && e[(1, 0)].norm() < 1e-15);
    }

    /// Plain truncated Taylor series, the independent oracle for the scaled
    /// and squared implementation.
    fn taylor_exp(a: &ComplexMatrix, terms: usize) -> ComplexMatrix {
        let n = a.rows();
        let mut acc = ComplexMatrix::identity(n);
        let mut term = ComplexMatrix::identity(n);
        for k in 1..=terms {
            term = term.matmul(a);
            term.scale_mut(c(1.0 / k as f64, 0.0));
            acc.add_scaled(c(1.0, 0.0), &term);
        }
        acc
    }

    #[test]
    fn matrix_exponential_matches_taylor_oracle_and_is_unitary() {
        // Fixed anti-Hermitian 4x4 (entries chosen once, no RNG needed).
        let h = ComplexMatrix::from_rows(&[
            vec![c(0.3, 0.0), c(0.2, 0.5), c(-0.1, 0.0), c(0.0, 0.7)],
            vec![c(0.2, -0.5), c(-0.4, 0.0), c(0.6, 0.1), c(0.2, 0.0)],
            vec![c(-0.1, 0.0), c(0.6, -0.1), c(0.9, 0.0), c(0.0, -0.3)],
            vec![c(0.0, -0.7), c(0.2, 0.0), c(0.0, 0.3), c(-0.2, 0.0)],
        ]);
        let a = h.scale(c(0.0, 1.0)); // iH is anti-Hermitian
        let e = matrix_exponential(&a).unwrap();
        let oracle = taylor_exp(&a, 30);
        assert!((&e - &oracle).max_abs() < 1e-12);

        let u = e.adjoint().matmul(&e);
        assert!((&u - &ComplexMatrix::identity(4)).frobenius_norm() < 1e-10);
    }

    #[test]
    fn matrix_exponential_inverse_property() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(0.0, 2.0), c(1.5, 0.0)],
            vec![c(-1.5, 0.0), c(0.0, -2.0)],
        ]);
        let e = matrix_exponential(&a).unwrap();
        let em = matrix_exponential(&a.scale(c(-1.0, 0.0))).unwrap();
        assert!((&e.matmul(&em) - &ComplexMatrix::identity(2)).frobenius_norm() < 1e-10);
    }

    #[test]
    fn matrix_exponential_rejects_non_square() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            matrix_exponential(&a),
            Err(Error::NonSquare { .. })
        ));
    }

    #[test]
    fn joint_eigenspaces_of_diagonal_sign_matrix() {
        let a = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        let spaces = joint_eigenspaces(&[a], 1e-9).unwrap();
        assert_eq!(spaces.len(), 2);
        for space in &spaces {
            assert_eq!(space.basis.len(), 1);
            assert!((space.eigenvalues[0].norm() - 1.0).abs() < 1e-12);
        }
        // kernels-first ordering is by |c|, so -1 with lower (re, im) first
        assert!((spaces[0].eigenvalues[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((spaces[1].eigenvalues[0] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn joint_eigenspaces_reproduce_hermitian_spectral_decomposition() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.5, 0.2), c(0.0, -0.4)],
            vec![c(0.5, -0.2), c(-0.5, 0.0), c(0.3, 0.1)],
            vec![c(0.0, 0.4), c(0.3, -0.1), c(2.0, 0.0)],
        ]);
        let spaces = joint_eigenspaces(std::slice::from_ref(&a), 1e-9).unwrap();
        assert_eq!(spaces.len(), 3);
        let (oracle, _) = hermitian_eigen(&a).unwrap();
        let mut got: Vec<f64> = spaces.iter().map(|s| s.eigenvalues[0].re).collect();
        got.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (g, o) in got.iter().zip(&oracle) {
            assert!((g - o).abs() < 1e-10, "{g} vs {o}");
        }
        // residual is re-checkable from the output
        for space in &spaces {
            for v in &space.basis {
                let mut img = a.matvec(v);
                img.add_scaled(-space.eigenvalues[0], v);
                assert!(img.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn joint_eigenspaces_reject_mismatched_dimensions() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert!(matches!(
            joint_eigenspaces(&[a, b], 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn joint_eigenspaces_mutual_orthogonality_under_degeneracy() {
        let a = ComplexMatrix::diagonal(&[c(2.0, 0.0), c(2.0, 0.0), c(-1.0, 0.0)]);
        let spaces = joint_eigenspaces(&[a], 1e-9).unwrap();
        assert_eq!(spaces.len(), 2);
        let degenerate = spaces.iter().find(|s| s.basis.len() == 2).unwrap();
        let single = spaces.iter().find(|s| s.basis.len() == 1).unwrap();
        for v in &degenerate.basis {
            assert!(v.inner(&single.basis[0]).norm() < 1e-12);
        }
    }
}
