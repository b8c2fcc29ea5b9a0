//! Moving decoherence-free subspaces.
//!
//! A subspace trajectory assigns to each time an orthonormal subspace basis
//! {|Φ_j(t)⟩} and its orthonormal complement {|Φ_n⊥(t)⟩}. The subspace is
//! decoherence-free when two conditions hold at every instant:
//!
//! 1. every basis vector is an eigenvector of every jump operator with an
//!    eigenvalue common to the whole basis, F_α(t)|Φ_j(t)⟩ = c_α(t)|Φ_j(t)⟩;
//! 2. the subspace is invariant under the effective Hamiltonian
//!    H_eff = G + H + (i/2)Σ_α γ_α (c_α* F_α − c_α F_α†),
//!    where G(t) = iU†(t)U̇(t) is the gauge operator of the moving frame and
//!    U(t) maps the frame at time t back to its anchor snapshot.
//!
//! This module provides both directions: residual checks quantifying how
//! well a given (model, trajectory) pair satisfies the conditions, and a
//! synthesizer producing the unique Hamiltonian block that enforces the
//! second condition once the first one holds. A stepwise-unitary frame
//! propagator doubles as an independent cross-check against the full master
//! equation integrator.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{matrix_exponential, ComplexMatrix, Ket};
use crate::error::{Error, Result};
use crate::lindblad::{
    segment_grid, Channel, DensityMatrix, IntegratorConfig, LindbladModel, Trajectory,
};

/// Time-dependent orthonormal frame piece, evaluated on demand.
pub type FrameFn = Arc<dyn Fn(f64) -> Vec<Ket> + Send + Sync>;

/// Where basis derivatives come from.
#[derive(Clone)]
pub enum DerivativeSource {
    /// Exact time derivatives of the basis and complement kets.
    Analytic {
        basis_dot: FrameFn,
        complement_dot: FrameFn,
    },
    /// Central differences with step `step` on the frame itself.
    FiniteDifference { step: f64 },
}

/// One constant-dimension stretch of a subspace trajectory: `[start, end)`
/// with a fixed subspace dimension.
#[derive(Clone)]
pub struct FrameSegment {
    start: f64,
    end: f64,
    subspace_dim: usize,
    basis: FrameFn,
    complement: FrameFn,
    derivative: DerivativeSource,
}

impl FrameSegment {
    pub fn new(
        start: f64,
        end: f64,
        subspace_dim: usize,
        basis: FrameFn,
        complement: FrameFn,
        derivative: DerivativeSource,
    ) -> Self {
        assert!(end > start, "segment must have positive length");
        assert!(subspace_dim >= 1);
        Self {
            start,
            end,
            subspace_dim,
            basis,
            complement,
            derivative,
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn subspace_dim(&self) -> usize {
        self.subspace_dim
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }

    pub fn basis(&self, t: f64) -> Vec<Ket> {
        (self.basis)(t)
    }

    pub fn complement(&self, t: f64) -> Vec<Ket> {
        (self.complement)(t)
    }

    pub fn basis_dot(&self, t: f64) -> Result<Vec<Ket>> {
        match &self.derivative {
            DerivativeSource::Analytic { basis_dot, .. } => Ok(basis_dot(t)),
            DerivativeSource::FiniteDifference { step } => {
                self.fd_guard(t, *step)?;
                Ok(central_difference(&self.basis, t, *step))
            }
        }
    }

    pub fn complement_dot(&self, t: f64) -> Result<Vec<Ket>> {
        match &self.derivative {
            DerivativeSource::Analytic { complement_dot, .. } => Ok(complement_dot(t)),
            DerivativeSource::FiniteDifference { step } => {
                self.fd_guard(t, *step)?;
                Ok(central_difference(&self.complement, t, *step))
            }
        }
    }

    fn fd_guard(&self, t: f64, step: f64) -> Result<()> {
        if t - step < self.start || t + step > self.end {
            return Err(Error::DerivativeUnavailable {
                t,
                reason: "central difference would cross a segment boundary",
            });
        }
        Ok(())
    }

    /// Frame unitary anchored at this segment's start:
    /// U(t) = Σ_j |Φ_j(a)⟩⟨Φ_j(t)| + Σ_n |Φ_n⊥(a)⟩⟨Φ_n⊥(t)|, a = start.
    pub fn frame_unitary_from_start(&self, t: f64) -> ComplexMatrix {
        let anchor_basis = self.basis(self.start);
        let anchor_comp = self.complement(self.start);
        assemble_frame(
            &anchor_basis,
            &anchor_comp,
            &self.basis(t),
            &self.complement(t),
        )
    }
}

fn central_difference(f: &FrameFn, t: f64, h: f64) -> Vec<Ket> {
    let plus = f(t + h);
    let minus = f(t - h);
    plus.iter()
        .zip(&minus)
        .map(|(p, m)| {
            let mut d = p.clone();
            d.add_scaled(Complex64::new(-1.0, 0.0), m);
            d.scale(Complex64::new(0.5 / h, 0.0))
        })
        .collect()
}

fn assemble_frame(
    anchor_basis: &[Ket],
    anchor_comp: &[Ket],
    basis: &[Ket],
    complement: &[Ket],
) -> ComplexMatrix {
    let n = anchor_basis[0].dim();
    let mut u = ComplexMatrix::zeros(n, n);
    for (a, b) in anchor_basis.iter().zip(basis) {
        u.add_scaled(Complex64::new(1.0, 0.0), &a.outer(b));
    }
    for (a, b) in anchor_comp.iter().zip(complement) {
        u.add_scaled(Complex64::new(1.0, 0.0), &a.outer(b));
    }
    u
}

/// A time-dependent orthonormal subspace with a piecewise-constant dimension
/// schedule. Segments tile `[start, ∞)` or a finite span contiguously.
#[derive(Clone)]
pub struct SubspaceTrajectory {
    dim: usize,
    segments: Vec<FrameSegment>,
}

impl SubspaceTrajectory {
    pub fn new(dim: usize, segments: Vec<FrameSegment>) -> Result<Self> {
        assert!(!segments.is_empty(), "at least one segment required");
        for seg in &segments {
            assert!(
                seg.subspace_dim >= 1 && seg.subspace_dim < dim,
                "subspace dimension must lie in [1, N-1]"
            );
        }
        for pair in segments.windows(2) {
            assert!(
                pair[0].end == pair[1].start,
                "segments must tile the span contiguously"
            );
        }
        Ok(Self { dim, segments })
    }

    /// Single segment from `start` onwards.
    pub fn single_segment(
        dim: usize,
        subspace_dim: usize,
        start: f64,
        basis: FrameFn,
        complement: FrameFn,
        derivative: DerivativeSource,
    ) -> Result<Self> {
        Self::new(
            dim,
            vec![FrameSegment::new(
                start,
                f64::INFINITY,
                subspace_dim,
                basis,
                complement,
                derivative,
            )],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start_time(&self) -> f64 {
        self.segments[0].start
    }

    pub fn segments(&self) -> &[FrameSegment] {
        &self.segments
    }

    /// Interior segment boundaries (the dimension-schedule breakpoints).
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    pub fn segment_at(&self, t: f64) -> Result<&FrameSegment> {
        self.segments
            .iter()
            .find(|s| s.contains(t))
            .ok_or(Error::DerivativeUnavailable {
                t,
                reason: "time outside the trajectory span",
            })
    }

    pub fn subspace_dim_at(&self, t: f64) -> Result<usize> {
        Ok(self.segment_at(t)?.subspace_dim)
    }

    pub fn basis(&self, t: f64) -> Result<Vec<Ket>> {
        Ok(self.segment_at(t)?.basis(t))
    }

    pub fn complement(&self, t: f64) -> Result<Vec<Ket>> {
        Ok(self.segment_at(t)?.complement(t))
    }

    pub fn basis_dot(&self, t: f64) -> Result<Vec<Ket>> {
        self.segment_at(t)?.basis_dot(t)
    }

    /// Same trajectory with every derivative source replaced by central
    /// finite differences of step `h`.
    pub fn with_finite_difference(&self, h: f64) -> Self {
        assert!(h > 0.0);
        let segments = self
            .segments
            .iter()
            .map(|s| FrameSegment {
                derivative: DerivativeSource::FiniteDifference { step: h },
                ..s.clone()
            })
            .collect();
        Self {
            dim: self.dim,
            segments,
        }
    }

    /// Check that basis ∪ complement is orthonormal within `tol` at `t`.
    pub fn validate_frame_at(&self, t: f64, tol: f64) -> Result<()> {
        let seg = self.segment_at(t)?;
        let mut frame = seg.basis(t);
        frame.extend(seg.complement(t));
        if frame.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: frame.len(),
            });
        }
        for i in 0..frame.len() {
            for j in 0..frame.len() {
                let g = frame[i].inner(&frame[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                let dev = (g - Complex64::new(expect, 0.0)).norm();
                if dev > tol {
                    return Err(Error::StateInvariantViolated {
                        what: "frame orthonormality",
                        t,
                        value: dev,
                        tol,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Frame unitary anchored at the trajectory start.
///
/// Fails with [`Error::DimensionChangeCrossed`] when `t` lies beyond the
/// first constant-dimension segment: no unitary connects subspaces of
/// different dimension, so the frame is only defined per segment.
pub fn frame_unitary(sub: &SubspaceTrajectory, t: f64) -> Result<ComplexMatrix> {
    let first = &sub.segments()[0];
    if t < first.start {
        return Err(Error::DerivativeUnavailable {
            t,
            reason: "time before the trajectory start",
        });
    }
    if !first.contains(t) {
        return Err(Error::DimensionChangeCrossed {
            from: first.start,
            to: t,
        });
    }
    Ok(first.frame_unitary_from_start(t))
}

/// Gauge operator G(t) = iU†(t)U̇(t) of the moving frame.
///
/// With analytic derivatives this is assembled directly as
/// i(Σ_j |Φ_j⟩⟨Φ̇_j| + Σ_n |Φ_n⊥⟩⟨Φ̇_n⊥|); in finite-difference mode the
/// frame unitary itself is centrally differenced. Hermitian up to the
/// consistency of the supplied frame (exactly, in exact arithmetic).
pub fn gauge_operator(sub: &SubspaceTrajectory, t: f64) -> Result<ComplexMatrix> {
    let seg = sub.segment_at(t)?;
    match &seg.derivative {
        DerivativeSource::Analytic { .. } => {
            let basis = seg.basis(t);
            let comp = seg.complement(t);
            let basis_dot = seg.basis_dot(t)?;
            let comp_dot = seg.complement_dot(t)?;
            let n = sub.dim();
            let mut g = ComplexMatrix::zeros(n, n);
            for (b, d) in basis.iter().zip(&basis_dot) {
                g.add_scaled(Complex64::new(0.0, 1.0), &b.outer(d));
            }
            for (b, d) in comp.iter().zip(&comp_dot) {
                g.add_scaled(Complex64::new(0.0, 1.0), &b.outer(d));
            }
            Ok(g)
        }
        DerivativeSource::FiniteDifference { step } => {
            let h = *step;
            seg.fd_guard(t, h)?;
            let u_plus = seg.frame_unitary_from_start(t + h);
            let u_minus = seg.frame_unitary_from_start(t - h);
            let u = seg.frame_unitary_from_start(t);
            let mut du = u_plus;
            du.add_scaled(Complex64::new(-1.0, 0.0), &u_minus);
            du.scale_mut(Complex64::new(0.5 / h, 0.0));
            let mut g = u.adjoint().matmul(&du);
            g.scale_mut(Complex64::new(0.0, 1.0));
            Ok(g)
        }
    }
}

/// Result of the eigencondition check at one time.
#[derive(Debug, Clone)]
pub struct EigenconditionCheck {
    /// c_α(t), estimated from the first basis vector.
    pub eigenvalues: Vec<Complex64>,
    /// max over (j, α) of ‖F_α|Φ_j⟩ − c_α|Φ_j⟩‖.
    pub residual: f64,
    /// max over (j, α) of |⟨Φ_j|F_α|Φ_j⟩ − c_α|: the common-eigenvalue
    /// requirement made into an explicit, testable quantity.
    pub spread: f64,
}

/// Eigencondition residuals for the subspace basis at `t`.
pub fn check_eigencondition(
    model: &LindbladModel,
    sub: &SubspaceTrajectory,
    t: f64,
) -> Result<EigenconditionCheck> {
    let basis = sub.basis(t)?;
    Ok(eigencondition_of_basis(model.channels(), &basis, t))
}

/// Eigencondition residuals for an explicit candidate basis (not tied to a
/// [`SubspaceTrajectory`]).
pub fn eigencondition_of_basis(channels: &[Channel], basis: &[Ket], t: f64) -> EigenconditionCheck {
    let mut eigenvalues = Vec::with_capacity(channels.len());
    let mut residual = 0.0f64;
    let mut spread = 0.0f64;
    for ch in channels {
        let f = (ch.jump)(t);
        let c = basis[0].inner(&f.matvec(&basis[0]));
        for v in basis {
            let image = f.matvec(v);
            let rayleigh = v.inner(&image);
            spread = spread.max((rayleigh - c).norm());
            let mut r = image;
            r.add_scaled(-c, v);
            residual = residual.max(r.norm());
        }
        eigenvalues.push(c);
    }
    EigenconditionCheck {
        eigenvalues,
        residual,
        spread,
    }
}

/// H_eff(t) = G(t) + H(t) + (i/2) Σ_α γ_α (c_α* F_α − c_α F_α†).
///
/// Pass `eigenvalues` when they are already known; otherwise they are
/// estimated through [`check_eigencondition`].
pub fn effective_hamiltonian(
    model: &LindbladModel,
    sub: &SubspaceTrajectory,
    t: f64,
    eigenvalues: Option<&[Complex64]>,
) -> Result<ComplexMatrix> {
    let owned;
    let c = match eigenvalues {
        Some(c) => c,
        None => {
            owned = check_eigencondition(model, sub, t)?.eigenvalues;
            &owned
        }
    };
    let gauge = gauge_operator(sub, t)?;
    Ok(effective_hamiltonian_with_gauge(model, &gauge, t, c))
}

pub(crate) fn effective_hamiltonian_with_gauge(
    model: &LindbladModel,
    gauge: &ComplexMatrix,
    t: f64,
    eigenvalues: &[Complex64],
) -> ComplexMatrix {
    let mut h_eff = gauge + &model.hamiltonian(t);
    for (ch, &c) in model.channels().iter().zip(eigenvalues) {
        if ch.rate == 0.0 {
            continue;
        }
        let f = (ch.jump)(t);
        let half_i_rate = Complex64::new(0.0, 0.5 * ch.rate);
        h_eff.add_scaled(half_i_rate * c.conj(), &f);
        h_eff.add_scaled(-half_i_rate * c, &f.adjoint());
    }
    h_eff
}

/// Invariance residual max over (n, j) of |⟨Φ_n⊥(t)|H_eff(t)|Φ_j(t)⟩|.
pub fn check_invariance(model: &LindbladModel, sub: &SubspaceTrajectory, t: f64) -> Result<f64> {
    let h_eff = effective_hamiltonian(model, sub, t, None)?;
    let basis = sub.basis(t)?;
    let complement = sub.complement(t)?;
    Ok(invariance_residual(&h_eff, &basis, &complement))
}

pub(crate) fn invariance_residual(h_eff: &ComplexMatrix, basis: &[Ket], complement: &[Ket]) -> f64 {
    let mut residual = 0.0f64;
    for v in basis {
        let image = h_eff.matvec(v);
        for w in complement {
            residual = residual.max(w.inner(&image).norm());
        }
    }
    residual
}

/// Construct the Hamiltonian that keeps the state inside the moving
/// subspace.
///
/// The subspace-to-complement block is pinned by the invariance condition:
///
/// ```text
/// ⟨Φ_k|H|Φ_n⊥⟩ = −i⟨Φ̇_k|Φ_n⊥⟩ − (i/2) Σ_α γ_α c_α* ⟨Φ_k|F_α|Φ_n⊥⟩
/// ```
///
/// Both diagonal blocks are left at zero unless `intra` supplies a Hermitian
/// subspace-internal block (in the subspace basis ordering). Requires the
/// eigencondition to hold at `t` within `tol`.
pub fn synthesize_control(
    channels: &[Channel],
    sub: &SubspaceTrajectory,
    t: f64,
    intra: Option<&ComplexMatrix>,
    tol: f64,
) -> Result<ComplexMatrix> {
    let seg = sub.segment_at(t)?;
    let basis = seg.basis(t);
    let complement = seg.complement(t);
    let basis_dot = seg.basis_dot(t)?;

    let check = eigencondition_of_basis(channels, &basis, t);
    if check.residual > tol || check.spread > tol {
        return Err(Error::EigenconditionViolated {
            t,
            residual: check.residual.max(check.spread),
            tol,
        });
    }

    let n = basis[0].dim();
    let mut h = ComplexMatrix::zeros(n, n);
    let jumps: Vec<ComplexMatrix> = channels.iter().map(|ch| (ch.jump)(t)).collect();

    for (phi_k, phi_k_dot) in basis.iter().zip(&basis_dot) {
        for perp in &complement {
            let mut element = Complex64::new(0.0, -1.0) * phi_k_dot.inner(perp);
            for ((ch, c), f) in channels.iter().zip(&check.eigenvalues).zip(&jumps) {
                if ch.rate == 0.0 {
                    continue;
                }
                element +=
                    Complex64::new(0.0, -0.5 * ch.rate) * c.conj() * phi_k.inner(&f.matvec(perp));
            }
            h.add_scaled(element, &phi_k.outer(perp));
            h.add_scaled(element.conj(), &perp.outer(phi_k));
        }
    }

    if let Some(block) = intra {
        let m = basis.len();
        if block.rows() != m || block.cols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: block.rows(),
            });
        }
        debug_assert!(block.is_hermitian(1e-10), "intra block must be Hermitian");
        for (k, phi_k) in basis.iter().enumerate() {
            for (l, phi_l) in basis.iter().enumerate() {
                h.add_scaled(block[(k, l)], &phi_k.outer(phi_l));
            }
        }
    }
    Ok(h)
}

/// Per-sample verification record.
#[derive(Debug, Clone, Serialize)]
pub struct DfsSample {
    pub t: f64,
    pub eigenvalues: Vec<ComplexValue>,
    pub eigencondition_residual: f64,
    pub eigenvalue_spread: f64,
    pub invariance_residual: f64,
    pub gauge_hermiticity: f64,
    pub eigencondition_ok: bool,
    pub invariance_ok: bool,
}

/// Complex number in a JSON-friendly shape.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Per-segment verification summary.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentVerdict {
    pub start: f64,
    /// `None` for an open-ended final segment.
    pub end: Option<f64>,
    pub subspace_dim: usize,
    pub samples: usize,
    pub max_eigencondition_residual: f64,
    pub max_eigenvalue_spread: f64,
    pub max_invariance_residual: f64,
    pub max_gauge_hermiticity: f64,
    pub eigencondition_ok: bool,
    pub invariance_ok: bool,
    pub verdict: bool,
}

/// Aggregated verification report; serializable to JSON.
#[derive(Debug, Clone, Serialize)]
pub struct DfsReport {
    pub tolerance: f64,
    pub samples: Vec<DfsSample>,
    pub segments: Vec<SegmentVerdict>,
    pub max_eigencondition_residual: f64,
    pub max_eigenvalue_spread: f64,
    pub max_invariance_residual: f64,
    pub verdict: bool,
}

/// Run both subspace conditions on every grid time and aggregate.
///
/// Grid points that coincide exactly with a segment boundary are skipped:
/// the gauge operator is only defined in segment interiors.
pub fn verify_tdfs(
    model: &LindbladModel,
    sub: &SubspaceTrajectory,
    grid: &[f64],
    tol: f64,
) -> Result<DfsReport> {
    let mut samples = Vec::with_capacity(grid.len());
    for &t in grid {
        let seg = sub.segment_at(t)?;
        if t == seg.start() || t == seg.end() {
            continue;
        }
        let check = check_eigencondition(model, sub, t)?;
        let gauge = gauge_operator(sub, t)?;
        let h_eff = effective_hamiltonian_with_gauge(model, &gauge, t, &check.eigenvalues);
        let basis = seg.basis(t);
        let complement = seg.complement(t);
        let inv = invariance_residual(&h_eff, &basis, &complement);
        samples.push(DfsSample {
            t,
            eigenvalues: check.eigenvalues.iter().map(|&z| z.into()).collect(),
            eigencondition_residual: check.residual,
            eigenvalue_spread: check.spread,
            invariance_residual: inv,
            gauge_hermiticity: gauge.hermiticity_deviation(),
            eigencondition_ok: check.residual <= tol && check.spread <= tol,
            invariance_ok: inv <= tol,
        });
    }

    let mut segments = Vec::new();
    for seg in sub.segments() {
        let in_seg: Vec<&DfsSample> = samples.iter().filter(|s| seg.contains(s.t)).collect();
        if in_seg.is_empty() {
            continue;
        }
        let fold = |f: fn(&DfsSample) -> f64| in_seg.iter().map(|s| f(s)).fold(0.0, f64::max);
        let max_eig = fold(|s| s.eigencondition_residual);
        let max_spread = fold(|s| s.eigenvalue_spread);
        let max_inv = fold(|s| s.invariance_residual);
        let eig_ok = max_eig <= tol && max_spread <= tol;
        let inv_ok = max_inv <= tol;
        segments.push(SegmentVerdict {
            start: seg.start(),
            end: seg.end().is_finite().then_some(seg.end()),
            subspace_dim: seg.subspace_dim(),
            samples: in_seg.len(),
            max_eigencondition_residual: max_eig,
            max_eigenvalue_spread: max_spread,
            max_invariance_residual: max_inv,
            max_gauge_hermiticity: fold(|s| s.gauge_hermiticity),
            eigencondition_ok: eig_ok,
            invariance_ok: inv_ok,
            verdict: eig_ok && inv_ok,
        });
    }

    let max_eig = samples
        .iter()
        .map(|s| s.eigencondition_residual)
        .fold(0.0, f64::max);
    let max_spread = samples
        .iter()
        .map(|s| s.eigenvalue_spread)
        .fold(0.0, f64::max);
    let max_inv = samples
        .iter()
        .map(|s| s.invariance_residual)
        .fold(0.0, f64::max);
    let verdict = !samples.is_empty() && segments.iter().all(|s| s.verdict);
    Ok(DfsReport {
        tolerance: tol,
        samples,
        segments,
        max_eigencondition_residual: max_eig,
        max_eigenvalue_spread: max_spread,
        max_invariance_residual: max_inv,
        verdict,
    })
}

/// Evolve a subspace-supported state by stepwise unitaries of the effective
/// Hamiltonian in the rotating frame, mapping back to the lab frame at every
/// recorded point.
///
/// Within each constant-dimension segment the frame is anchored at the
/// segment's own start. Across a dimension breakpoint the state is handed
/// over unchanged in the lab frame: no unitary connects subspaces of
/// different dimension, so no global frame is attempted. Propagation is
/// unitary by construction; for a pure initial state the state vector itself
/// is propagated and purity is preserved to machine precision.
///
/// Both subspace conditions are re-checked at every step midpoint and a
/// violation aborts with [`Error::ConditionsViolated`].
pub fn frame_propagate(
    model: &LindbladModel,
    sub: &SubspaceTrajectory,
    rho0: &DensityMatrix,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    tol: f64,
) -> Result<Trajectory> {
    assert!(t1 > t0);
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }

    // The state must start inside the subspace.
    let basis0 = sub.basis(t0)?;
    let mut inside = 0.0;
    for v in &basis0 {
        inside += v.inner(&rho0.matrix().matvec(v)).re;
    }
    if (1.0 - inside).abs() > 1e-8_f64.max(tol) {
        return Err(Error::ConditionsViolated {
            what: "initial subspace support",
            t: t0,
            residual: (1.0 - inside).abs(),
            tol: 1e-8_f64.max(tol),
        });
    }

    // Merge model breakpoints with dimension breakpoints so the grid matches
    // the RK4 integrator exactly.
    let mut breakpoints = model.breakpoints().to_vec();
    breakpoints.extend(sub.breakpoints());
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup();

    let pure_input = crate::lindblad::purity(rho0) >= 1.0 - 1e-12;
    let mut state = if pure_input {
        let (vals, vecs) = crate::algebra::hermitian_eigen(rho0.matrix())?;
        let top = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .expect("nonempty spectrum");
        FrameState::Pure(vecs[top].clone())
    } else {
        FrameState::Mixed(rho0.matrix().clone())
    };

    let mut trajectory = Trajectory::empty();
    trajectory.push(t0, DensityMatrix::from_trusted(state.density()));

    for (seg_start, seg_end, steps) in segment_grid(t0, t1, cfg.dt, &breakpoints) {
        let frame_seg = sub.segment_at(seg_start)?;
        // Anchor the rotating frame at this piece's start: U(seg_start) = I,
        // so the lab-frame state handed over from the previous piece is
        // already the rotating-frame state here.
        let anchor_basis = frame_seg.basis(seg_start);
        let anchor_comp = frame_seg.complement(seg_start);
        let h = (seg_end - seg_start) / steps as f64;

        for k in 0..steps {
            let t = seg_start + k as f64 * h;
            let t_mid = t + 0.5 * h;

            let basis = frame_seg.basis(t_mid);
            let complement = frame_seg.complement(t_mid);
            let check = eigencondition_of_basis(model.channels(), &basis, t_mid);
            if check.residual > tol || check.spread > tol {
                return Err(Error::ConditionsViolated {
                    what: "eigencondition",
                    t: t_mid,
                    residual: check.residual.max(check.spread),
                    tol,
                });
            }
            let gauge = gauge_operator(sub, t_mid)?;
            let h_eff = effective_hamiltonian_with_gauge(model, &gauge, t_mid, &check.eigenvalues)
                .hermitian_part();
            let inv = invariance_residual(&h_eff, &basis, &complement);
            if inv > tol {
                return Err(Error::ConditionsViolated {
                    what: "invariance",
                    t: t_mid,
                    residual: inv,
                    tol,
                });
            }

            // Rotating-frame generator and the midpoint-rule step unitary.
            let u_mid = assemble_frame(
                &anchor_basis,
                &anchor_comp,
                &frame_seg.basis(t_mid),
                &frame_seg.complement(t_mid),
            );
            let h_bar = u_mid
                .matmul(&h_eff)
                .matmul(&u_mid.adjoint())
                .hermitian_part();
            let step_unitary = matrix_exponential(&h_bar.scale(Complex64::new(0.0, -h)))?;
            state.apply(&step_unitary);

            if (k + 1) % cfg.record_stride == 0 || k + 1 == steps {
                let t_next = if k + 1 == steps {
                    seg_end
                } else {
                    seg_start + (k + 1) as f64 * h
                };
                let u_next = assemble_frame(
                    &anchor_basis,
                    &anchor_comp,
                    &frame_seg.basis(t_next),
                    &frame_seg.complement(t_next),
                );
                let lab = state.lab_density(&u_next);
                trajectory.push(t_next, DensityMatrix::from_trusted(lab));
            }
        }

        // Hand the state across the piece boundary unchanged in the lab frame.
        let u_end = assemble_frame(
            &anchor_basis,
            &anchor_comp,
            &frame_seg.basis(seg_end),
            &frame_seg.complement(seg_end),
        );
        state.rotate_to_lab(&u_end);
    }

    Ok(trajectory)
}

/// Rotating-frame state: a ket for pure inputs (purity exactly preserved),
/// a density matrix otherwise.
#[allow(clippy::large_enum_variant)]
enum FrameState {
    Pure(Ket),
    Mixed(ComplexMatrix),
}

impl FrameState {
    fn apply(&mut self, u: &ComplexMatrix) {
        match self {
            FrameState::Pure(psi) => {
                let next = u.matvec(psi);
                *psi = next.normalized();
            }
            FrameState::Mixed(rho) => {
                *rho = u.matmul(rho).matmul(&u.adjoint());
            }
        }
    }

    /// Density matrix in the current (rotating) frame.
    fn density(&self) -> ComplexMatrix {
        match self {
            FrameState::Pure(psi) => psi.projector(),
            FrameState::Mixed(rho) => rho.clone(),
        }
    }

    /// Lab-frame density matrix, ρ = U† ρ̄ U.
    fn lab_density(&self, u: &ComplexMatrix) -> ComplexMatrix {
        match self {
            FrameState::Pure(psi) => u.adjoint().matvec(psi).normalized().projector(),
            FrameState::Mixed(rho) => u.adjoint().matmul(rho).matmul(u),
        }
    }

    /// Replace the rotating-frame representation by the lab-frame one.
    fn rotate_to_lab(&mut self, u: &ComplexMatrix) {
        match self {
            FrameState::Pure(psi) => {
                *psi = u.adjoint().matvec(psi).normalized();
            }
            FrameState::Mixed(rho) => {
                *rho = u.adjoint().matmul(rho).matmul(u);
            }
        }
    }
}
