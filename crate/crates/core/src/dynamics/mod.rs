//! Glauber Monte Carlo over angle profiles with hard-core self-avoidance.

mod glauber;
mod mc;
mod saw;
mod theta;

pub use glauber::{glauber_accept, glauber_probability};
pub use mc::{mc_step, propose_move, rng_for, run_many, run_schedule, McState, Move, Sample, Trajectory};
pub use saw::{self_avoidance_ok, self_avoiding_with, SpatialGrid};
pub use theta::{
    fit_scaling, ground_state_kappa, ground_state_profile, theta_scan, ScalingFit, ScanPoint, ThetaScan,
    ThetaScanConfig,
};

use crate::energy::{Boundary, EnergyError};
use crate::geometry::{GeometryError, CANONICAL_BOND};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("initial chain is not self-avoiding")]
    NotSelfAvoiding,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("B-factor must be non-negative, got {0}")]
    NegativeBFactor(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// `steps` Monte Carlo steps at temperature `kt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub steps: usize,
    pub kt: f64,
}

/// A piecewise-constant temperature program.
///
/// Its text form is a comma-separated list of `steps@kT` stages, or
/// `geom:FROM:TO:STAGES:STEPS` for a geometric ramp.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub stages: Vec<Stage>,
}

impl Schedule {
    pub fn constant(steps: usize, kt: f64) -> Self {
        Self { stages: vec![Stage { steps, kt }] }
    }

    /// `stages` temperatures spaced geometrically from `from` to `to`.
    pub fn geometric(from: f64, to: f64, stages: usize, steps_per_stage: usize) -> Self {
        let stages = (0..stages)
            .map(|i| {
                let f = if stages > 1 { i as f64 / (stages - 1) as f64 } else { 0.0 };
                Stage { steps: steps_per_stage, kt: from * (to / from).powf(f) }
            })
            .collect();
        Self { stages }
    }

    /// A geometric ramp up to `high` and back down to `low`.
    pub fn heat_cool(low: f64, high: f64, stages: usize, steps_per_stage: usize) -> Self {
        let mut up = Self::geometric(low, high, stages, steps_per_stage);
        let down = Self::geometric(high, low, stages, steps_per_stage);
        up.stages.extend(down.stages.into_iter().skip(1));
        up
    }

    pub fn total_steps(&self) -> usize {
        self.stages.iter().map(|s| s.steps).sum()
    }
}

impl FromStr for Schedule {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DynamicsError::InvalidConfig(format!("cannot parse schedule {s:?}"));
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("geom:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 4 {
                return Err(bad());
            }
            let from: f64 = parts[0].parse().map_err(|_| bad())?;
            let to: f64 = parts[1].parse().map_err(|_| bad())?;
            let stages: usize = parts[2].parse().map_err(|_| bad())?;
            let steps: usize = parts[3].parse().map_err(|_| bad())?;
            return Ok(Self::geometric(from, to, stages, steps));
        }
        let stages = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let (steps, kt) = p.trim().split_once('@').ok_or_else(bad)?;
                Ok(Stage { steps: steps.trim().parse().map_err(|_| bad())?, kt: kt.trim().parse().map_err(|_| bad())? })
            })
            .collect::<Result<Vec<_>, DynamicsError>>()?;
        Ok(Self { stages })
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.stages.iter().map(|s| format!("{}@{}", s.steps, s.kt)).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MCConfig {
    pub schedule: Schedule,
    /// Proposal widths, rad.
    pub sigma_kappa: f64,
    pub sigma_tau: f64,
    pub seed: u64,
    pub measure_every: usize,
    /// Move only bond angles and keep every torsion at `τ[κ]`.
    pub kappa_only: bool,
    pub boundary: Boundary,
    /// Self-avoidance exclusion distance, Å.
    pub min_distance: f64,
}

impl Default for MCConfig {
    fn default() -> Self {
        Self {
            schedule: Schedule::default(),
            sigma_kappa: 0.1,
            sigma_tau: 0.1,
            seed: 0,
            measure_every: 1000,
            kappa_only: false,
            boundary: Boundary::Soliton,
            min_distance: CANONICAL_BOND,
        }
    }
}

impl MCConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::InvalidConfig(m));
        if let Some(s) = self.schedule.stages.iter().find(|s| !(s.kt > 0.0 && s.kt.is_finite())) {
            return bad(format!("kT must be positive, got {}", s.kt));
        }
        if !(self.sigma_kappa >= 0.0 && self.sigma_tau >= 0.0) {
            return bad("proposal widths must be non-negative".into());
        }
        if self.measure_every == 0 {
            return bad("measure_every must be at least 1".into());
        }
        if !(self.min_distance >= 0.0) {
            return bad("min_distance must be non-negative".into());
        }
        Ok(())
    }
}

/// Positional fluctuation `√(B/8π²)` in Å for a B-factor in Å².
pub fn debye_waller(b: f64) -> Result<f64, DynamicsError> {
    if b < 0.0 || b.is_nan() {
        return Err(DynamicsError::NegativeBFactor(b));
    }
    Ok((b / (8.0 * PI * PI)).sqrt())
}
