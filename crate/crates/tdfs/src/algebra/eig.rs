//! Eigenvalue machinery for small dense complex matrices.
//!
//! Two solvers live here: a cyclic Jacobi sweep for Hermitian matrices
//! (eigenvalues and an orthonormal eigenbasis) and a Hessenberg + shifted-QR
//! iteration for eigenvalues of general complex matrices. Both target
//! dimensions well below a hundred; no blocking, no balancing.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, Ket};
use crate::error::{Error, Result};

const MAX_JACOBI_SWEEPS: usize = 60;

/// Eigen-decomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order with matching orthonormal
/// eigenvectors, each phase-fixed so its largest component is real positive.
/// The strictly-lower triangle of the input is taken as the conjugate of the
/// upper one, so mild Hermiticity violations are symmetrized away.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<(Vec<f64>, Vec<Ket>)> {
    let n = a.require_square()?;
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut h = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = h.frobenius_norm().max(1.0);

    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += h[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut h, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| h[(i, i)].re.partial_cmp(&h[(j, j)].re).unwrap());
    let values = order.iter().map(|&i| h[(i, i)].re).collect();
    let vectors = order.iter().map(|&i| v.column(i).fix_phase()).collect();
    Ok((values, vectors))
}

/// One complex Jacobi rotation zeroing h[(p, q)]; accumulates into `v`.
fn jacobi_rotate(h: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = h[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = h[(p, p)].re;
    let aqq = h[(q, q)].re;
    let phase = apq / mag; // e^{iθ}

    // Real Jacobi angle for the phase-stripped 2x2 block [[app, mag], [mag, aqq]].
    let beta = (aqq - app) / (2.0 * mag);
    let t = if beta >= 0.0 {
        1.0 / (beta + (1.0 + beta * beta).sqrt())
    } else {
        -1.0 / (-beta + (1.0 + beta * beta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // Column rotation: col_p' = c*col_p - conj(w)*s*col_q,
    //                  col_q' = s*w*col_p + c*col_q, with w = phase.
    let n = h.rows();
    let w = phase;
    for i in 0..n {
        let hip = h[(i, p)];
        let hiq = h[(i, q)];
        h[(i, p)] = hip * c - hiq * w.conj() * s;
        h[(i, q)] = hip * w * s + hiq * c;
    }
    for j in 0..n {
        let hpj = h[(p, j)];
        let hqj = h[(q, j)];
        h[(p, j)] = hpj * c - hqj * w * s;
        h[(q, j)] = hpj * w.conj() * s + hqj * c;
    }
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * c - viq * w.conj() * s;
        v[(i, q)] = vip * w * s + viq * c;
    }
    // Clean the rounding residue in the zeroed pair.
    h[(p, q)] = Complex64::default();
    h[(q, p)] = Complex64::default();
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(a).map(|(vals, _)| vals)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    let vals = hermitian_eigenvalues(a)?;
    Ok(vals.first().copied().unwrap_or(0.0))
}

/// Eigenvalues of a general complex square matrix, in no particular order.
///
/// Hessenberg reduction followed by a Wilkinson-shifted QR iteration on the
/// trailing active block. Eigenvectors are not produced; callers extract
/// eigenspaces through null spaces of shifted matrices, which is far more
/// robust for (possibly non-normal) clustered spectra.
pub fn general_eigenvalues(a: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = a.require_square()?;
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![a[(0, 0)]]),
        2 => {
            let (l1, l2) = eig2(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
            return Ok(vec![l1, l2]);
        }
        _ => {}
    }

    let mut h = hessenberg(a);
    let scale = h.frobenius_norm().max(1.0);
    let eps = f64::EPSILON;
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iterations = 0usize;
    let max_iterations = 60 * n;

    loop {
        // Zero negligible subdiagonals.
        for k in 0..hi {
            let bound = eps * (h[(k, k)].norm() + h[(k + 1, k + 1)].norm()) + 1e-300;
            if h[(k + 1, k)].norm() <= bound.max(eps * scale * 1e-2) {
                h[(k + 1, k)] = Complex64::default();
            }
        }

        // Deflate converged eigenvalues off the bottom.
        while hi > 0 && h[(hi, hi - 1)] == Complex64::default() {
            eigs.push(h[(hi, hi)]);
            hi -= 1;
        }
        if hi == 0 {
            eigs.push(h[(0, 0)]);
            break;
        }

        // Active block [lo..=hi].
        let mut lo = hi;
        while lo > 0 && h[(lo, lo - 1)] != Complex64::default() {
            lo -= 1;
        }

        if hi - lo == 1 {
            let (l1, l2) = eig2(h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            eigs.push(l1);
            eigs.push(l2);
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            continue;
        }

        iterations += 1;
        if iterations > max_iterations {
            return Err(Error::EigenConvergence);
        }

        // Wilkinson shift from the trailing 2x2 of the active block, with an
        // occasional exceptional shift to break rare cycles.
        let shift = if iterations.is_multiple_of(17) {
            h[(hi, hi)] + Complex64::new(1.5 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            let (l1, l2) = eig2(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            let d = h[(hi, hi)];
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        qr_step(&mut h, lo, hi, shift);
    }

    Ok(eigs)
}

/// Eigenvalues of [[a, b], [c, d]] via the stabilized quadratic formula.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let half_tr = 0.5 * (a + d);
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    // Pick the root with larger magnitude first to avoid cancellation,
    // recover the other from the determinant where possible.
    let l1 = if (half_tr + disc).norm() >= (half_tr - disc).norm() {
        half_tr + disc
    } else {
        half_tr - disc
    };
    let l2 = if l1.norm() > 0.0 {
        det / l1
    } else {
        half_tr - disc
    };
    (l1, l2)
}

/// Householder reduction to upper Hessenberg form.
fn hessenberg(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        // Reflector for column k, rows k+1..n.
        let mut x: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let alpha = if x[0].norm() > 0.0 {
            -(x[0] / x[0].norm()) * xnorm
        } else {
            Complex64::new(-xnorm, 0.0)
        };
        x[0] -= alpha;
        let vnorm_sq = x.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if vnorm_sq == 0.0 {
            continue;
        }

        // H = I - 2 v v† / (v†v), applied as H A H.
        // Left: rows k+1..n of all columns.
        for j in 0..n {
            let mut dot = Complex64::default();
            for (vi, i) in x.iter().zip(k + 1..n) {
                dot += vi.conj() * h[(i, j)];
            }
            let f = 2.0 * dot / vnorm_sq;
            for (vi, i) in x.iter().zip(k + 1..n) {
                let delta = f * vi;
                h[(i, j)] -= delta;
            }
        }
        // Right: columns k+1..n of all rows.
        for i in 0..n {
            let mut dot = Complex64::default();
            for (vj, j) in x.iter().zip(k + 1..n) {
                dot += h[(i, j)] * vj;
            }
            let f = 2.0 * dot / vnorm_sq;
            for (vj, j) in x.iter().zip(k + 1..n) {
                let delta = f * vj.conj();
                h[(i, j)] -= delta;
            }
        }
        // Below-subdiagonal entries of column k are now zero by construction.
        for i in k + 2..n {
            h[(i, k)] = Complex64::default();
        }
    }
    h
}

/// One explicit shifted QR step on the active Hessenberg block [lo..=hi],
/// using complex Givens rotations: H ← R Q + shift·I.
fn qr_step(h: &mut ComplexMatrix, lo: usize, hi: usize, shift: Complex64) {
    let n = h.rows();
    for i in lo..=hi {
        h[(i, i)] -= shift;
    }

    // Factor: apply rotations G_k annihilating the subdiagonal.
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let f = h[(k, k)];
        let g = h[(k + 1, k)];
        let (c, s) = givens(f, g);
        rotations.push((c, s));
        // Rows k, k+1.
        for j in k..n.min(hi + 1) {
            let a = h[(k, j)];
            let b = h[(k + 1, j)];
            h[(k, j)] = c * a + s * b;
            h[(k + 1, j)] = -s.conj() * a + c * b;
        }
        h[(k + 1, k)] = Complex64::default();
    }

    // Multiply back: H ← R Q, columns k, k+1 mixed by G_k†.
    for (k, (c, s)) in (lo..hi).zip(rotations) {
        for i in lo..=(k + 1).min(hi) {
            let a = h[(i, k)];
            let b = h[(i, k + 1)];
            h[(i, k)] = a * c + b * s.conj();
            h[(i, k + 1)] = -a * s + b * c;
        }
    }

    for i in lo..=hi {
        h[(i, i)] += shift;
    }
}

/// Complex Givens pair (c real, s complex) with
/// [[c, s], [-s̄, c]] · [f, g]ᵀ = [r, 0]ᵀ.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    let gn = g.norm();
    if gn == 0.0 {
        return (1.0, Complex64::default());
    }
    let fn_ = f.norm();
    let r = (fn_ * fn_ + gn * gn).sqrt();
    if fn_ == 0.0 {
        return (0.0, g.conj() / gn);
    }
    let c = fn_ / r;
    let s = (f / fn_) * (g.conj() / r);
    (c, s)
}
