//! Measurement records consumed by the estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// How the local-oscillator phases of a scan are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseSampling {
    /// `ψ_j = nπ·j/N`, the linear piezo ramp.
    #[default]
    Equispaced,
    /// i.i.d. uniform over `[0, nπ)`.
    Uniform,
}

/// Geometry of one homodyne phase scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Quadrature samples per scan, `N_ψ`.
    pub n_samples: usize,
    /// Phases span `[0, range_multiplier · π)`.
    pub range_multiplier: u32,
    pub sampling: PhaseSampling,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n_samples: 900,
            range_multiplier: 2,
            sampling: PhaseSampling::Equispaced,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be >= 1".into()));
        }
        if self.range_multiplier == 0 {
            return Err(Error::InvalidConfig("range_multiplier must be >= 1".into()));
        }
        Ok(())
    }
}

/// Paired LO phases and quadrature samples from one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneScan<T> {
    phases: Vec<T>,
    samples: Vec<T>,
    pub meta: Option<ScanConfig>,
}

impl<T: Real> HomodyneScan<T> {
    pub fn new(phases: Vec<T>, samples: Vec<T>) -> Result<Self> {
        if phases.len() != samples.len() {
            return Err(Error::ConfigMismatch(format!(
                "{} phases but {} samples",
                phases.len(),
                samples.len()
            )));
        }
        if phases.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        Ok(Self { phases, samples, meta: None })
    }

    pub fn with_meta(mut self, meta: ScanConfig) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.phases.iter().copied().zip(self.samples.iter().copied())
    }

    /// A scan whose squared samples equal the model variance exactly; the
    /// sign of each sample is irrelevant to every estimator.
    pub fn expected_moments(params: &crate::model::StateParams<T>, phases: Vec<T>) -> Result<Self> {
        let samples = phases.iter().map(|&p| params.variance(p).sqrt()).collect();
        Self::new(phases, samples)
    }
}

/// `μ` simultaneous samples `(q₁, p₂)` from double-homodyne detection.
#[derive(Debug, Clone, PartialEq)]
pub struct DhdBatch<T> {
    q1: Vec<T>,
    p2: Vec<T>,
}

impl<T: Real> DhdBatch<T> {
    pub fn new(q1: Vec<T>, p2: Vec<T>) -> Result<Self> {
        if q1.len() != p2.len() {
            return Err(Error::ConfigMismatch(format!(
                "{} q1 samples but {} p2 samples",
                q1.len(),
                p2.len()
            )));
        }
        Ok(Self { q1, p2 })
    }

    pub fn mu(&self) -> usize {
        self.q1.len()
    }

    pub fn q1(&self) -> &[T] {
        &self.q1
    }

    pub fn p2(&self) -> &[T] {
        &self.p2
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.q1.iter().copied().zip(self.p2.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(HomodyneScan::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(HomodyneScan::<f64>::new(vec![], vec![]).is_err());
        assert!(DhdBatch::new(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn default_scan_matches_experiment_geometry() {
        let c = ScanConfig::default();
        assert_eq!((c.n_samples, c.range_multiplier), (900, 2));
        assert!(c.validate().is_ok());
    }
}
