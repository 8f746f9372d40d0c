//! Run configuration, read from JSON.
//!
//! ```json
//! {
//!   "label": "small",
//!   "envelope": { "accel": [7.5, 7.5, 0.0], "rate": [5.0, 5.0, 1.0] },
//!   "disturbance": { "accel": [0.1, 0.1, 0.1], "alpha": [0.1, 0.1, 0.1] },
//!   "simulation": { "runs": 100, "seed": 1 },
//!   "output": "out/small"
//! }
//! ```
//!
//! Every other section (`vehicle`, `trajectory`, `weights`, `cascade`) is
//! optional. An `envelope` takes precedence over the one sampled from a
//! `trajectory`; at least one of the two is required.

use std::path::{Path, PathBuf};

use loglin::sim::{ClosedLoopConfig, DisturbanceFamily, MonteCarloConfig};
use loglin::trajectory::{min_snap, reference_envelope, ConstantTwist, Envelope, FlatReference, Reference};
use loglin::{CascadeOptions, DisturbanceBounds, InputVector, LqrWeights, VehicleParams};
use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub envelope: Option<Envelope>,
    #[serde(default)]
    pub trajectory: Option<TrajectoryConfig>,
    #[serde(default)]
    pub weights: LqrWeights,
    pub disturbance: DisturbanceBounds,
    #[serde(default)]
    pub cascade: CascadeOptions,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Waypoints `[x, y, z, yaw]` and their arrival times.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub waypoints: Vec<[f64; 4]>,
    pub times: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub dt: f64,
    pub duration: f64,
    pub runs: usize,
    pub seed: u64,
    pub family: DisturbanceFamily,
    /// Hz.
    pub freq_range: (f64, f64),
    /// Runs whose full logs are written.
    pub keep_logs: usize,
    pub log_every: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let mc = MonteCarloConfig::default();
        let cl = ClosedLoopConfig::default();
        Self {
            dt: cl.dt,
            duration: cl.duration,
            runs: mc.runs,
            seed: mc.seed,
            family: mc.family,
            freq_range: mc.freq_range,
            keep_logs: 10,
            log_every: 10,
        }
    }
}

impl SimulationConfig {
    pub fn monte_carlo(&self) -> MonteCarloConfig {
        MonteCarloConfig {
            runs: self.runs,
            seed: self.seed,
            family: self.family,
            freq_range: self.freq_range,
            keep_logs: self.keep_logs.min(self.runs),
        }
    }

    pub fn closed_loop(&self) -> ClosedLoopConfig {
        ClosedLoopConfig { dt: self.dt, duration: self.duration, log_every: self.log_every, ..Default::default() }
    }
}

fn invalid(e: loglin::Error) -> CliError {
    CliError::Config(e.to_string())
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: Config = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.vehicle.validate().map_err(invalid)?;
        self.disturbance.validate().map_err(invalid)?;
        if let Some(env) = &self.envelope {
            env.validate().map_err(invalid)?;
        }
        if self.envelope.is_none() && self.trajectory.is_none() {
            return Err(CliError::Config("one of `envelope` or `trajectory` is required".into()));
        }
        self.simulation.closed_loop().validate().map_err(invalid)?;
        let s = &self.simulation;
        if s.runs == 0 {
            return Err(CliError::Config("`simulation.runs` must be at least 1".into()));
        }
        let (lo, hi) = s.freq_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(CliError::Config(format!("`simulation.freq_range` ({lo}, {hi}) must satisfy 0 < lo <= hi")));
        }
        let w = &self.weights;
        let positive = w.q_omega.iter().chain(w.r_omega.iter()).chain(w.q_zeta.iter()).chain(w.r_zeta.iter()).all(|v| *v > 0.0 && v.is_finite());
        if !positive {
            return Err(CliError::Config("`weights` entries must be positive".into()));
        }
        if let Some(label) = &self.label {
            if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(CliError::Config(format!("`label` {label:?} must be non-empty [A-Za-z0-9_-]")));
            }
        }
        Ok(())
    }

    pub fn flat_reference(&self) -> Result<Option<FlatReference>, CliError> {
        let Some(t) = &self.trajectory else { return Ok(None) };
        let wp: Vec<Vector4<f64>> = t.waypoints.iter().map(|w| Vector4::from(*w)).collect();
        let traj = min_snap(&wp, &t.times).map_err(|e| CliError::Config(format!("trajectory: {e}")))?;
        Ok(Some(FlatReference::new(traj, self.vehicle.gravity)))
    }

    /// The override if present, otherwise the sampled trajectory envelope.
    pub fn envelope(&self) -> Result<Envelope, CliError> {
        if let Some(env) = self.envelope {
            return Ok(env);
        }
        let r = self.flat_reference()?.expect("validated: trajectory present");
        let t = &self.trajectory.as_ref().expect("validated").times;
        reference_envelope(&r, t[0], t[t.len() - 1]).map_err(|e| CliError::Config(format!("trajectory envelope: {e}")))
    }

    /// The trajectory when given, else a constant twist at the envelope.
    pub fn reference(&self, envelope: &Envelope) -> Result<Box<dyn Reference>, CliError> {
        if let Some(r) = self.flat_reference()? {
            return Ok(Box::new(r));
        }
        Ok(Box::new(ConstantTwist {
            start: loglin::GroupState::identity(),
            input: InputVector::new(envelope.accel, envelope.rate),
            gravity: self.vehicle.gravity,
        }))
    }
}
