//! Property tests for the algebra invariants that everything else leans on.

use num_complex::Complex64;
use proptest::prelude::*;
use tdfs::algebra::{gram_schmidt, matrix_exponential, ComplexMatrix, Ket};

fn complex_entry() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn ket(dim: usize) -> impl Strategy<Value = Ket> {
    proptest::collection::vec(complex_entry(), dim).prop_map(Ket::new)
}

fn hermitian(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec(complex_entry(), dim * dim).prop_map(move |entries| {
        let mut m = ComplexMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = entries[i * dim + j];
            }
        }
        m.hermitian_part()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_schmidt_yields_orthonormal_sets(vectors in proptest::collection::vec(ket(4), 1..=4)) {
        // Rank-deficient draws are legitimately rejected; only successful
        // orthonormalizations are held to the tolerance.
        if let Ok(out) = gram_schmidt(&vectors, 1e-9) {
            for i in 0..out.len() {
                for j in 0..out.len() {
                    let g = out[i].inner(&out[j]);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((g - Complex64::new(expect, 0.0)).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn matrix_exponential_of_anti_hermitian_is_unitary(h in hermitian(4), scale in 0.1f64..3.0) {
        // A = i·scale·H is anti-Hermitian with ‖A‖ up to ~10.
        let a = h.scale(Complex64::new(0.0, scale));
        let e = matrix_exponential(&a).unwrap();
        let gram = e.adjoint().matmul(&e);
        let dev = (&gram - &ComplexMatrix::identity(4)).frobenius_norm();
        prop_assert!(dev <= 1e-10, "unitarity deviation {dev:.3e}");

        let em = matrix_exponential(&a.scale(Complex64::new(-1.0, 0.0))).unwrap();
        let inv = (&e.matmul(&em) - &ComplexMatrix::identity(4)).frobenius_norm();
        prop_assert!(inv <= 1e-10, "inverse deviation {inv:.3e}");
    }

    #[test]
    fn joint_eigenspace_residuals_are_recheckable(h in hermitian(3)) {
        let spaces = tdfs::algebra::joint_eigenspaces(std::slice::from_ref(&h), 1e-9).unwrap();
        let mut total_dim = 0;
        for space in &spaces {
            for v in &space.basis {
                let mut image = h.matvec(v);
                image.add_scaled(-space.eigenvalues[0], v);
                prop_assert!(image.norm() <= 1e-8 * h.frobenius_norm().max(1.0));
            }
            total_dim += space.basis.len();
        }
        prop_assert_eq!(total_dim, 3);
    }
}
