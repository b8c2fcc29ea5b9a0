//! JSON experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use tdfs::models::{
    five_level_model, xi_model, ControlMode, FiveLevelParams, RampVariant, TransitionSchedule,
};
use tdfs::{LindbladModel, SubspaceTrajectory};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    /// Squeezing amplitude of the three-level model.
    #[serde(default = "one")]
    pub r: f64,
    /// Squeezing amplitudes of the five-level model's two reservoirs.
    #[serde(default = "one")]
    pub r1: f64,
    #[serde(default = "one")]
    pub r2: f64,
    /// Squeezing phase rate: φ(t) = omega0 · t.
    pub omega0: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub gamma1: f64,
    #[serde(default = "one")]
    pub gamma2: f64,
    /// Transition coefficient of the five-level model.
    #[serde(default = "one", rename = "Omega")]
    pub omega: f64,
    pub mode: ModeKind,
    #[serde(default)]
    pub transition: TransitionKind,
    #[serde(default)]
    pub ramp: RampKind,
    pub time: TimeSpan,
    /// Integrator step; defaults to 1e-3 / (fastest rate in the model).
    #[serde(default)]
    pub dt: Option<f64>,
    /// Record every k-th step; defaults to a stride keeping ~4000 rows.
    #[serde(default)]
    pub record_stride: Option<usize>,
    /// Verification grid points per constant-dimension segment.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Verification tolerance.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub output: OutputPaths,
}

fn one() -> f64 {
    1.0
}

fn default_grid_points() -> usize {
    200
}

fn default_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Xi,
    FiveLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    None,
    Paper,
    PaperFrozen,
    Synthesized,
}

impl From<ModeKind> for ControlMode {
    fn from(m: ModeKind) -> Self {
        match m {
            ModeKind::None => ControlMode::NoControl,
            ModeKind::Paper => ControlMode::PaperPrinted,
            ModeKind::PaperFrozen => ControlMode::PaperFrozen,
            ModeKind::Synthesized => ControlMode::Synthesized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    #[default]
    Step,
    Always,
}

impl From<TransitionKind> for TransitionSchedule {
    fn from(t: TransitionKind) -> Self {
        match t {
            TransitionKind::Step => TransitionSchedule::Step,
            TransitionKind::Always => TransitionSchedule::Always,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RampKind {
    #[default]
    AsPrinted,
    Halved,
}

impl From<RampKind> for RampVariant {
    fn from(r: RampKind) -> Self {
        match r {
            RampKind::AsPrinted => RampVariant::AsPrinted,
            RampKind::Halved => RampVariant::Halved,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpan {
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    pub units: TimeUnits,
}

/// How the time span is stated: as ω₀t (matching the figure axes), as γt,
/// or as raw time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnits {
    #[default]
    Omega0T,
    GammaT,
    Absolute,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: PathBuf,
    #[serde(default)]
    pub report: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.time.end.partial_cmp(&self.time.start) != Some(std::cmp::Ordering::Greater) {
            return Err(format!(
                "time span must be forward, got [{}, {}]",
                self.time.start, self.time.end
            ));
        }
        if self.time.units == TimeUnits::Omega0T && self.omega0 == 0.0 {
            return Err("time units omega0_t need a non-zero omega0".into());
        }
        let max_rate = match self.model {
            ModelKind::Xi => self.gamma,
            ModelKind::FiveLevel => self.gamma1.max(self.gamma2),
        };
        if self.time.units == TimeUnits::GammaT && max_rate == 0.0 {
            return Err("time units gamma_t need a non-zero rate".into());
        }
        if let Some(dt) = self.dt {
            if dt.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(format!("dt must be positive, got {dt}"));
            }
        }
        if self.grid_points == 0 {
            return Err("grid_points must be at least 1".into());
        }
        if self.tolerance.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err("tolerance must be positive".into());
        }
        match self.model {
            ModelKind::Xi => {
                if self.r < 0.0 || self.gamma <= 0.0 {
                    return Err("xi model needs r >= 0 and gamma > 0".into());
                }
            }
            ModelKind::FiveLevel => {
                if self.r1 < 0.0 || self.r2 < 0.0 || self.gamma1 <= 0.0 || self.gamma2 <= 0.0 {
                    return Err("five_level model needs r1, r2 >= 0 and gamma1, gamma2 > 0".into());
                }
                if self.omega0 <= 0.0 {
                    return Err(
                        "five_level model needs omega0 > 0 for its dimension schedule".into(),
                    );
                }
            }
        }
        Ok(())
    }

    /// Span in raw time units.
    pub fn span(&self) -> (f64, f64) {
        let scale = match self.time.units {
            TimeUnits::Omega0T => 1.0 / self.omega0.abs(),
            TimeUnits::GammaT => {
                1.0 / match self.model {
                    ModelKind::Xi => self.gamma,
                    ModelKind::FiveLevel => self.gamma1.max(self.gamma2),
                }
            }
            TimeUnits::Absolute => 1.0,
        };
        (self.time.start * scale, self.time.end * scale)
    }

    pub fn build(&self) -> (LindbladModel, SubspaceTrajectory) {
        match self.model {
            ModelKind::Xi => xi_model(self.r, self.omega0, self.gamma, self.mode.into()),
            ModelKind::FiveLevel => five_level_model(&FiveLevelParams {
                r1: self.r1,
                r2: self.r2,
                omega0: self.omega0,
                gamma1: self.gamma1,
                gamma2: self.gamma2,
                omega: self.omega,
                transition: self.transition.into(),
                mode: self.mode.into(),
                ramp: self.ramp.into(),
            }),
        }
    }

    /// Same parameters with a different control mode.
    pub fn with_mode(&self, mode: ModeKind) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }
}
