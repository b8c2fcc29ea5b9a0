//! Time-dependent Markovian master equation and a fixed-step RK4 integrator.
//!
//! The generator is
//!
//! ```text
//! dρ/dt = -i[H(t), ρ] + Σ_α γ_α ( F_α ρ F_α† − ½{F_α†F_α, ρ} )
//! ```
//!
//! with explicit non-negative rates γ_α; the rate-absorbed convention is the
//! special case γ_α = 1. Hamiltonians and jump operators are supplied as
//! callables evaluated on demand. Models with non-smooth coefficients must
//! declare every non-smooth instant in `breakpoints`: the integrator splits
//! its steps exactly there and samples coefficients strictly inside each
//! smooth segment, never across a discontinuity.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{anticommutator, commutator, min_hermitian_eigenvalue, ComplexMatrix, Ket};
use crate::error::{Error, Result};

/// Time-dependent operator, evaluated on demand.
pub type OperatorFn = Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>;

/// One dissipative channel: a jump operator and its rate.
#[derive(Clone)]
pub struct Channel {
    pub jump: OperatorFn,
    pub rate: f64,
}

impl Channel {
    pub fn new(jump: OperatorFn, rate: f64) -> Self {
        assert!(rate >= 0.0, "channel rate must be non-negative");
        Self { jump, rate }
    }

    /// Constant jump operator.
    pub fn constant(op: ComplexMatrix, rate: f64) -> Self {
        Self::new(Arc::new(move |_| op.clone()), rate)
    }
}

/// The open-system model: dimension, Hamiltonian, channels, breakpoints.
#[derive(Clone)]
pub struct LindbladModel {
    dim: usize,
    hamiltonian: OperatorFn,
    channels: Vec<Channel>,
    breakpoints: Vec<f64>,
}

impl LindbladModel {
    pub fn new(
        dim: usize,
        hamiltonian: OperatorFn,
        channels: Vec<Channel>,
        mut breakpoints: Vec<f64>,
    ) -> Self {
        assert!(dim > 0);
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breakpoints.dedup();
        Self {
            dim,
            hamiltonian,
            channels,
            breakpoints,
        }
    }

    /// Model with H = 0.
    pub fn dissipative(dim: usize, channels: Vec<Channel>, breakpoints: Vec<f64>) -> Self {
        let zero = ComplexMatrix::zeros(dim, dim);
        Self::new(dim, Arc::new(move |_| zero.clone()), channels, breakpoints)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self, t: f64) -> ComplexMatrix {
        (self.hamiltonian)(t)
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Check the model invariants at one sample time: operator dimensions
    /// and Hermiticity of H(t) within 1e-10.
    pub fn validate_at(&self, t: f64) -> Result<()> {
        let h = self.hamiltonian(t);
        if h.rows() != self.dim || h.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: h.rows(),
            });
        }
        let dev = h.hermiticity_deviation();
        if dev > 1e-10 {
            return Err(Error::StateInvariantViolated {
                what: "hamiltonian Hermiticity",
                t,
                value: dev,
                tol: 1e-10,
            });
        }
        for ch in &self.channels {
            let f = (ch.jump)(t);
            if f.rows() != self.dim || f.cols() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: f.rows(),
                });
            }
        }
        Ok(())
    }
}

/// Validated density matrix: Hermitian, unit trace, no significantly
/// negative eigenvalues.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validate with the default tolerances (Hermiticity and trace within
    /// 1e-10, smallest eigenvalue at least −1e-8).
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(mat, 1e-10, 1e-10, 1e-8)
    }

    pub fn with_tolerances(
        mat: ComplexMatrix,
        herm_tol: f64,
        trace_tol: f64,
        eig_floor: f64,
    ) -> Result<Self> {
        mat.require_square()?;
        if !mat.is_finite() {
            return Err(Error::StateInvariantViolated {
                what: "state finiteness",
                t: f64::NAN,
                value: f64::NAN,
                tol: f64::INFINITY,
            });
        }
        let herm = mat.hermiticity_deviation();
        if herm > herm_tol {
            return Err(Error::StateInvariantViolated {
                what: "state Hermiticity",
                t: f64::NAN,
                value: herm,
                tol: herm_tol,
            });
        }
        let trace_dev = (mat.trace() - Complex64::new(1.0, 0.0)).norm();
        if trace_dev > trace_tol {
            return Err(Error::StateInvariantViolated {
                what: "state trace",
                t: f64::NAN,
                value: trace_dev,
                tol: trace_tol,
            });
        }
        let min_eig = min_hermitian_eigenvalue(&mat.hermitian_part())?;
        if min_eig < -eig_floor {
            return Err(Error::StateInvariantViolated {
                what: "state positivity",
                t: f64::NAN,
                value: min_eig,
                tol: eig_floor,
            });
        }
        Ok(Self { mat })
    }

    /// |ψ⟩⟨ψ| for a normalized ket.
    pub fn pure(ket: &Ket) -> Self {
        let v = ket.normalized();
        Self { mat: v.projector() }
    }

    /// I/N.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut m = ComplexMatrix::identity(dim);
        m.scale_mut(Complex64::new(1.0 / dim as f64, 0.0));
        Self { mat: m }
    }

    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn trace_deviation(&self) -> f64 {
        (self.mat.trace() - Complex64::new(1.0, 0.0)).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.mat.hermitian_part()).expect("square by construction")
    }
}

/// Tr\[ρ²\].
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    m.matmul(m).trace().re
}

/// ⟨v|ρ|v⟩ for a normalized ket; the imaginary part is rounding noise for
/// Hermitian ρ and is discarded.
pub fn population(rho: &DensityMatrix, v: &Ket) -> Result<f64> {
    if v.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: v.dim(),
        });
    }
    debug_assert!(
        v.is_normalized(1e-10),
        "population expects a normalized ket"
    );
    let p = v.inner(&rho.matrix().matvec(v));
    debug_assert!(p.im.abs() <= 1e-12);
    Ok(p.re)
}

/// Trace distance ½‖ρ − σ‖₁.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let diff = (a.matrix() - b.matrix()).hermitian_part();
    let eigs = crate::algebra::hermitian_eigenvalues(&diff).expect("square");
    0.5 * eigs.iter().map(|x| x.abs()).sum::<f64>()
}

/// Right-hand side of the master equation at time `t`.
pub fn lindblad_rhs(model: &LindbladModel, t: f64, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = rho.require_square()?;
    if n != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: n,
        });
    }
    let h = model.hamiltonian(t);
    if h.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h.rows(),
        });
    }
    let mut out = commutator(&h, rho);
    out.scale_mut(Complex64::new(0.0, -1.0));

    for ch in model.channels() {
        if ch.rate == 0.0 {
            continue;
        }
        let f = (ch.jump)(t);
        if f.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.rows(),
            });
        }
        let fdag = f.adjoint();
        let sandwich = f.matmul(rho).matmul(&fdag);
        let fdf = fdag.matmul(&f);
        let anti = anticommutator(&fdf, rho);
        out.add_scaled(Complex64::new(ch.rate, 0.0), &sandwich);
        out.add_scaled(Complex64::new(-0.5 * ch.rate, 0.0), &anti);
    }
    Ok(out)
}

/// Fixed-step RK4 settings.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    /// Nominal step; actual steps divide each smooth segment evenly.
    pub dt: f64,
    /// Divide the state by its trace after every step (off by default:
    /// trace drift is a diagnostic, not something to hide).
    pub renormalize_trace: bool,
    /// Record every k-th step (segment boundaries are always recorded).
    pub record_stride: usize,
    /// Guard tolerances checked at every recorded point.
    pub trace_tol: f64,
    pub hermiticity_tol: f64,
    /// Recorded states must have smallest eigenvalue ≥ −positivity_floor.
    pub positivity_floor: f64,
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        assert!(dt > 0.0, "dt must be positive");
        Self {
            dt,
            renormalize_trace: false,
            record_stride: 1,
            trace_tol: 1e-8,
            hermiticity_tol: 1e-8,
            positivity_floor: 1e-8,
        }
    }

    pub fn record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }
}

/// Integration output on a time grid, with the standard observables attached.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub purity: Vec<f64>,
    pub trace_deviation: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory never empty")
    }

    /// ⟨v(t)|ρ(t)|v(t)⟩ along the trajectory for a time-dependent ket.
    pub fn population_series<F>(&self, ket_at: F) -> Result<Vec<f64>>
    where
        F: Fn(f64) -> Ket,
    {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, rho)| population(rho, &ket_at(t)))
            .collect()
    }

    pub fn min_purity(&self) -> f64 {
        self.purity.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_purity(&self) -> f64 {
        self.purity
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn push(&mut self, t: f64, state: DensityMatrix) {
        self.purity.push(purity(&state));
        self.trace_deviation.push(state.trace_deviation());
        self.min_eigenvalue.push(state.min_eigenvalue());
        self.times.push(t);
        self.states.push(state);
    }

    pub(crate) fn empty() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            purity: Vec::new(),
            trace_deviation: Vec::new(),
            min_eigenvalue: Vec::new(),
        }
    }
}

/// Default step rule: dt = 1e-3 · min(1/γ, 1/ω₀, 1/maxΩ), where γ is the
/// largest channel rate, ω₀ the largest supplied phase rate, and maxΩ the
/// largest Hamiltonian entry sampled across the span. Resolves the fastest
/// timescale with RK4 margin; callers may always override.
pub fn default_time_step(model: &LindbladModel, t0: f64, t1: f64, phase_rates: &[f64]) -> f64 {
    let mut fastest: f64 = 0.0;
    for ch in model.channels() {
        fastest = fastest.max(ch.rate);
    }
    for &w in phase_rates {
        fastest = fastest.max(w.abs());
    }
    let samples = 256;
    for k in 0..=samples {
        let t = t0 + (t1 - t0) * k as f64 / samples as f64;
        fastest = fastest.max(model.hamiltonian(t).max_abs());
    }
    if fastest <= 0.0 {
        fastest = 1.0;
    }
    1e-3 / fastest
}

/// Smooth segments of [t0, t1] delimited by the breakpoints inside it, each
/// divided into even steps no longer than `dt`. Shared by the RK4 integrator
/// and the frame propagator so their grids coincide exactly.
pub(crate) fn segment_grid(
    t0: f64,
    t1: f64,
    dt: f64,
    breakpoints: &[f64],
) -> Vec<(f64, f64, usize)> {
    let mut edges = vec![t0];
    for &b in breakpoints {
        if b > t0 && b < t1 {
            edges.push(b);
        }
    }
    edges.push(t1);
    edges
        .windows(2)
        .map(|w| {
            let len = w[1] - w[0];
            let steps = (len / dt).ceil().max(1.0) as usize;
            (w[0], w[1], steps)
        })
        .collect()
}

/// Integrate the master equation with classical fixed-step RK4.
///
/// Steps are split exactly at every declared breakpoint in (t0, t1), and
/// coefficient evaluations at the two ends of each smooth segment are nudged
/// inside it by a relative epsilon, so one-sided limits of discontinuous
/// schedules are honored without a side-aware operator interface.
pub fn integrate(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    assert!(t1 > t0, "integration span must be forward");
    assert!(cfg.dt > 0.0);

    let mut trajectory = Trajectory::empty();
    let mut state = rho0.matrix().clone();
    record(&mut trajectory, t0, &state, cfg)?;

    for (seg_start, seg_end, steps) in segment_grid(t0, t1, cfg.dt, model.breakpoints()) {
        let h = (seg_end - seg_start) / steps as f64;
        // Keep coefficient samples strictly inside the smooth segment.
        let nudge = 1e-9 * h;
        let eval_t = |t: f64| t.clamp(seg_start + nudge, seg_end - nudge);

        for k in 0..steps {
            let t = seg_start + k as f64 * h;
            let k1 = lindblad_rhs(model, eval_t(t), &state)?;
            let mut s2 = state.clone();
            s2.add_scaled(Complex64::new(0.5 * h, 0.0), &k1);
            let k2 = lindblad_rhs(model, eval_t(t + 0.5 * h), &s2)?;
            let mut s3 = state.clone();
            s3.add_scaled(Complex64::new(0.5 * h, 0.0), &k2);
            let k3 = lindblad_rhs(model, eval_t(t + 0.5 * h), &s3)?;
            let mut s4 = state.clone();
            s4.add_scaled(Complex64::new(h, 0.0), &k3);
            let k4 = lindblad_rhs(model, eval_t(t + h), &s4)?;

            let w = h / 6.0;
            state.add_scaled(Complex64::new(w, 0.0), &k1);
            state.add_scaled(Complex64::new(2.0 * w, 0.0), &k2);
            state.add_scaled(Complex64::new(2.0 * w, 0.0), &k3);
            state.add_scaled(Complex64::new(w, 0.0), &k4);

            if cfg.renormalize_trace {
                let tr = state.trace();
                state.scale_mut(Complex64::new(1.0, 0.0) / tr);
            }

            let t_next = if k + 1 == steps {
                seg_end
            } else {
                seg_start + (k + 1) as f64 * h
            };
            if (k + 1) % cfg.record_stride == 0 || k + 1 == steps {
                record(&mut trajectory, t_next, &state, cfg)?;
            }
        }
    }
    Ok(trajectory)
}

fn record(
    trajectory: &mut Trajectory,
    t: f64,
    state: &ComplexMatrix,
    cfg: &IntegratorConfig,
) -> Result<()> {
    if !state.is_finite() {
        return Err(Error::StateInvariantViolated {
            what: "state finiteness",
            t,
            value: f64::NAN,
            tol: f64::INFINITY,
        });
    }
    let herm = state.hermiticity_deviation();
    if herm > cfg.hermiticity_tol {
        return Err(Error::StateInvariantViolated {
            what: "state Hermiticity",
            t,
            value: herm,
            tol: cfg.hermiticity_tol,
        });
    }
    let trace_dev = (state.trace() - Complex64::new(1.0, 0.0)).norm();
    if trace_dev > cfg.trace_tol {
        return Err(Error::StateInvariantViolated {
            what: "state trace",
            t,
            value: trace_dev,
            tol: cfg.trace_tol,
        });
    }
    let min_eig = min_hermitian_eigenvalue(&state.hermitian_part())?;
    if min_eig < -cfg.positivity_floor {
        return Err(Error::StateInvariantViolated {
            what: "state positivity",
            t,
            value: min_eig,
            tol: cfg.positivity_floor,
        });
    }
    trajectory.push(t, DensityMatrix::from_trusted(state.clone()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)])
    }

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
    }

    #[test]
    fn rhs_vanishes_for_trivial_model() {
        let model = LindbladModel::dissipative(2, vec![], vec![]);
        let rho = DensityMatrix::maximally_mixed(2);
        let out = lindblad_rhs(&model, 0.3, rho.matrix()).unwrap();
        assert!(out.max_abs() < 1e-15);
    }

    #[test]
    fn rhs_amplitude_damping_hand_value() {
        // F = |0⟩⟨1|, γ = 1, ρ = |1⟩⟨1| gives dρ/dt = |0⟩⟨0| − |1⟩⟨1|.
        let f = ComplexMatrix::ket_bra(2, 0, 1);
        let model = LindbladModel::dissipative(2, vec![Channel::constant(f, 1.0)], vec![]);
        let rho = DensityMatrix::pure(&Ket::basis_state(2, 1));
        let out = lindblad_rhs(&model, 0.0, rho.matrix()).unwrap();
        assert!((out[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((out[(1, 1)] - c(-1.0, 0.0)).norm() < 1e-14);
        assert!(out[(0, 1)].norm() < 1e-14 && out[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn rhs_is_hermitian_and_traceless() {
        let f = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.5)],
            vec![c(0.3, 0.0), c(0.0, 0.0)],
        ]);
        let h = sigma_x();
        let model = LindbladModel::new(
            2,
            Arc::new(move |_| h.clone()),
            vec![Channel::constant(f, 0.7)],
            vec![],
        );
        let rho = DensityMatrix::with_tolerances(
            ComplexMatrix::from_rows(&[
                vec![c(0.7, 0.0), c(0.1, 0.2)],
                vec![c(0.1, -0.2), c(0.3, 0.0)],
            ]),
            1e-12,
            1e-12,
            1e-8,
        )
        .unwrap();
        let out = lindblad_rhs(&model, 0.0, rho.matrix()).unwrap();
        assert!(out.hermiticity_deviation() < 1e-12);
        assert!(out.trace().norm() < 1e-12);
    }

    #[test]
    fn rhs_is_linear_in_the_state() {
        let f = ComplexMatrix::ket_bra(2, 0, 1);
        let model = LindbladModel::new(
            2,
            Arc::new(|_| sigma_z()),
            vec![Channel::constant(f, 0.4)],
            vec![],
        );
        let r1 = ComplexMatrix::from_rows(&[
            vec![c(0.6, 0.0), c(0.2, 0.1)],
            vec![c(0.2, -0.1), c(0.4, 0.0)],
        ]);
        let r2 = ComplexMatrix::from_rows(&[
            vec![c(0.1, 0.0), c(0.0, -0.3)],
            vec![c(0.0, 0.3), c(0.9, 0.0)],
        ]);
        let (a, b) = (0.3, -1.2);
        let mut combo = r1.scale(c(a, 0.0));
        combo.add_scaled(c(b, 0.0), &r2);
        let lhs = lindblad_rhs(&model, 0.0, &combo).unwrap();
        let mut rhs = lindblad_rhs(&model, 0.0, &r1).unwrap().scale(c(a, 0.0));
        rhs.add_scaled(c(b, 0.0), &lindblad_rhs(&model, 0.0, &r2).unwrap());
        assert!((&lhs - &rhs).max_abs() < 1e-10);
    }

    #[test]
    fn zero_generator_keeps_the_state_constant() {
        let model = LindbladModel::dissipative(3, vec![], vec![]);
        let rho0 = DensityMatrix::maximally_mixed(3);
        let traj = integrate(&model, &rho0, 0.0, 1.0, &IntegratorConfig::with_dt(0.05)).unwrap();
        for s in &traj.states {
            assert!((s.matrix() - rho0.matrix()).max_abs() < 1e-14);
        }
    }

    #[test]
    fn closed_system_larmor_precession() {
        // H = σ_z, ρ0 = |+⟩⟨+| : ⟨σ_x⟩(t) = cos(2t).
        let model = LindbladModel::new(2, Arc::new(|_| sigma_z()), vec![], vec![]);
        let plus = Ket::from_real(&[
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
        ]);
        let rho0 = DensityMatrix::pure(&plus);
        let traj = integrate(&model, &rho0, 0.0, 2.0, &IntegratorConfig::with_dt(1e-3)).unwrap();
        let sx = sigma_x();
        for (&t, s) in traj.times.iter().zip(&traj.states) {
            let meas = sx.matmul(s.matrix()).trace().re;
            assert!(
                (meas - (2.0 * t).cos()).abs() < 1e-8,
                "t={t}: {meas} vs {}",
                (2.0 * t).cos()
            );
        }
    }

    #[test]
    fn amplitude_damping_decay_law() {
        let f = ComplexMatrix::ket_bra(2, 0, 1);
        let model = LindbladModel::dissipative(2, vec![Channel::constant(f, 1.0)], vec![]);
        let rho0 = DensityMatrix::pure(&Ket::basis_state(2, 1));
        let traj = integrate(&model, &rho0, 0.0, 3.0, &IntegratorConfig::with_dt(1e-3)).unwrap();
        for (&t, s) in traj.times.iter().zip(&traj.states) {
            let p1 = s.matrix()[(1, 1)].re;
            assert!((p1 - (-t).exp()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn integrator_splits_at_breakpoints() {
        // Rate switches on at t = 0.37; a step must land exactly there.
        let switch = 0.37;
        let jump: OperatorFn = Arc::new(move |t| {
            if t > switch {
                ComplexMatrix::ket_bra(2, 0, 1)
            } else {
                ComplexMatrix::zeros(2, 2)
            }
        });
        let model = LindbladModel::new(
            2,
            Arc::new(|_| ComplexMatrix::zeros(2, 2)),
            vec![Channel::new(jump, 1.0)],
            vec![switch],
        );
        let rho0 = DensityMatrix::pure(&Ket::basis_state(2, 1));
        let traj = integrate(&model, &rho0, 0.0, 1.0, &IntegratorConfig::with_dt(0.02)).unwrap();
        assert!(traj.times.iter().any(|&t| (t - switch).abs() < 1e-15));
        // Population is frozen before the switch and decays after it.
        for (&t, s) in traj.times.iter().zip(&traj.states) {
            let p1 = s.matrix()[(1, 1)].re;
            let expect = if t <= switch {
                1.0
            } else {
                (-(t - switch)).exp()
            };
            assert!((p1 - expect).abs() < 1e-7, "t={t}: {p1} vs {expect}");
        }
    }

    #[test]
    fn rhs_annihilates_the_dark_state_projector() {
        // With H off, the dark state of the squeezed channel is stationary.
        let (model, sub) =
            crate::models::xi_model(1.0, 1.0, 1.0, crate::models::ControlMode::NoControl);
        let dark = sub.basis(0.0).unwrap().remove(0);
        let rho = DensityMatrix::pure(&dark);
        let out = lindblad_rhs(&model, 0.0, rho.matrix()).unwrap();
        assert!(
            out.max_abs() < 1e-12,
            "dark projector moved: {:.3e}",
            out.max_abs()
        );
    }

    #[test]
    fn optional_trace_renormalization_pins_the_trace() {
        let f = ComplexMatrix::ket_bra(2, 0, 1);
        let model = LindbladModel::dissipative(2, vec![Channel::constant(f, 1.0)], vec![]);
        let rho0 = DensityMatrix::pure(&Ket::basis_state(2, 1));
        let mut cfg = IntegratorConfig::with_dt(1e-2);
        cfg.renormalize_trace = true;
        let traj = integrate(&model, &rho0, 0.0, 2.0, &cfg).unwrap();
        for dev in &traj.trace_deviation {
            assert!(*dev < 1e-14);
        }
    }

    #[test]
    fn purity_of_known_states() {
        let pure = DensityMatrix::pure(&Ket::basis_state(4, 2));
        assert!((purity(&pure) - 1.0).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!((purity(&mixed) - 1.0 / 3.0).abs() < 1e-14);
        let diag =
            DensityMatrix::new(ComplexMatrix::diagonal(&[c(0.75, 0.0), c(0.25, 0.0)])).unwrap();
        assert!((purity(&diag) - 0.625).abs() < 1e-14);
    }

    #[test]
    fn population_of_known_states() {
        let v = Ket::basis_state(3, 1);
        let rho = DensityMatrix::pure(&v);
        assert!((population(&rho, &v).unwrap() - 1.0).abs() < 1e-14);
        let w = Ket::basis_state(3, 0);
        assert!(population(&rho, &w).unwrap().abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(5);
        let any = Ket::from_real(&[0.5, 0.5, 0.5, 0.5, 0.0]);
        assert!((population(&mixed, &any).unwrap() - 0.2).abs() < 1e-14);
    }

    #[test]
    fn population_rejects_dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(3);
        let v = Ket::basis_state(2, 0);
        assert!(matches!(
            population(&rho, &v),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn integrator_reports_invariant_violations() {
        // A non-Hermitian "Hamiltonian" breaks state Hermiticity quickly.
        let bad = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ]);
        let model = LindbladModel::new(2, Arc::new(move |_| bad.clone()), vec![], vec![]);
        let rho0 = DensityMatrix::pure(&Ket::basis_state(2, 1));
        let err = integrate(&model, &rho0, 0.0, 1.0, &IntegratorConfig::with_dt(0.01));
        assert!(matches!(err, Err(Error::StateInvariantViolated { .. })));
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let a = DensityMatrix::pure(&Ket::basis_state(2, 0));
        let b = DensityMatrix::pure(&Ket::basis_state(2, 1));
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-12);
        assert!(trace_distance(&a, &a) < 1e-14);
    }
}
