use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftKind {
    /// Brownian angle: increment variance `amplitude² · Δt / correlation_time`.
    RandomWalk,
    /// Stationary Ornstein–Uhlenbeck angle with standard deviation
    /// `amplitude` and autocorrelation `exp(−Δt / correlation_time)`.
    MeanReverting,
}

/// Slow drift of the squeezing angle between scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    pub kind: DriftKind,
    /// Seconds.
    pub correlation_time: f64,
    /// Seconds between successive samples of the trajectory.
    pub step_interval: f64,
    /// Radians.
    pub amplitude: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        Self {
            kind: DriftKind::MeanReverting,
            correlation_time: 5e-3,
            step_interval: 500e-6,
            amplitude: 0.0,
        }
    }
}

impl DriftModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.correlation_time > 0.0) || !(self.step_interval > 0.0) {
            return Err(Error::InvalidConfig(
                "drift correlation_time and step_interval must be > 0".into(),
            ));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::InvalidConfig("drift amplitude must be >= 0".into()));
        }
        Ok(())
    }
}

/// Angle offsets sampled every `step_interval`, starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTrajectory {
    pub step_interval: f64,
    pub offsets: Vec<f64>,
}

impl DriftTrajectory {
    /// Offset in effect at time `t` (sample-and-hold).
    pub fn at(&self, t: f64) -> f64 {
        let idx = (t / self.step_interval + 1e-9).floor().max(0.0) as usize;
        self.offsets[idx.min(self.offsets.len() - 1)]
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.offsets.len()).map(|k| k as f64 * self.step_interval)
    }
}

/// Simulates the drift over `[0, duration)`.
pub fn simulate_phase_drift(model: &DriftModel, duration: f64, key: &StreamKey) -> Result<DriftTrajectory> {
    model.validate()?;
    if !(duration > 0.0) {
        return Err(Error::InvalidConfig("drift duration must be > 0".into()));
    }
    let steps = ((duration / model.step_interval) - 1e-9).ceil().max(1.0) as usize;
    let mut rng = key.rng();
    let mut normal = move || -> f64 { rng.sample(StandardNormal) };
    let dt = model.step_interval;
    let mut offsets = Vec::with_capacity(steps);
    match model.kind {
        DriftKind::MeanReverting => {
            let rho = (-dt / model.correlation_time).exp();
            let innovation = model.amplitude * (1.0 - rho * rho).sqrt();
            let mut x = model.amplitude * normal();
            for _ in 0..steps {
                offsets.push(x);
                x = rho * x + innovation * normal();
            }
        }
        DriftKind::RandomWalk => {
            let step_sd = model.amplitude * (dt / model.correlation_time).sqrt();
            let mut x = 0.0;
            for _ in 0..steps {
                offsets.push(x);
                x += step_sd * normal();
            }
        }
    }
    Ok(DriftTrajectory { step_interval: dt, offsets })
}
