//! Simulation and control of open quantum systems whose Lindblad (jump)
//! operators move in time.
//!
//! The crate has four layers:
//!
//! * [`algebra`] — dense complex linear algebra for small Hilbert spaces
//!   (orthonormalization, matrix exponentials, joint eigenspaces).
//! * [`lindblad`] — the time-dependent Markovian master equation and a
//!   fixed-step RK4 integrator with breakpoint-aware stepping.
//! * [`dfs`] — the moving decoherence-free subspace machinery: frame
//!   unitary, gauge operator, effective Hamiltonian, the two subspace
//!   conditions as residual checks, control synthesis, and a unitary
//!   frame propagator used as a cross-validation oracle.
//! * [`models`] — the two reference systems: a Ξ-type three-level atom in
//!   a phase-rotating squeezed vacuum, and a five-level system whose
//!   protected subspace changes dimension mid-run.
//!
//! All operators are plain dense matrices over `Complex64`; nothing here
//! is tuned for large dimensions.

pub mod algebra;
pub mod dfs;
mod error;
pub mod lindblad;
pub mod models;

pub use algebra::{ComplexMatrix, Ket};
pub use dfs::{DerivativeSource, DfsReport, DfsSample, FrameFn, FrameSegment, SubspaceTrajectory};
pub use error::{Error, Result};
pub use lindblad::{
    Channel, DensityMatrix, IntegratorConfig, LindbladModel, OperatorFn, Trajectory,
};
pub use models::{ControlMode, FiveLevelParams, SqueezedChannelSpec, TransitionSchedule};
