use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StateParams;
use crate::rng::StreamKey;

/// Mode functions available for extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModeShape {
    /// `exp(−|t|/τ)` with `τ = 1/(π · FWHM)`, truncated at `±5τ`.
    #[default]
    DoubleExponential,
}

/// A unit-energy weight function applied to each window of the raw trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalMode {
    pub shape: ModeShape,
    /// Spectral full width at half maximum, Hz.
    pub fwhm_hz: f64,
    pub sample_rate_hz: f64,
    /// Number of trace samples the mode spans.
    pub window_len: usize,
}

impl TemporalMode {
    pub fn double_exponential(fwhm_hz: f64, sample_rate_hz: f64, window_len: usize) -> Result<Self> {
        let mode = Self {
            shape: ModeShape::DoubleExponential,
            fwhm_hz,
            sample_rate_hz,
            window_len,
        };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 {
            return Err(Error::InvalidConfig("mode window_len must be >= 1".into()));
        }
        if !(self.fwhm_hz > 0.0) || !(self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidConfig("mode fwhm_hz and sample_rate_hz must be > 0".into()));
        }
        Ok(())
    }

    /// Decay time in samples.
    pub fn decay_samples(&self) -> f64 {
        self.sample_rate_hz / (std::f64::consts::PI * self.fwhm_hz)
    }

    /// Normalized weights, `Σ f² = 1`, centered in the window.
    pub fn weights(&self) -> Vec<f64> {
        if self.window_len == 1 {
            return vec![1.0];
        }
        let tau = self.decay_samples();
        let center = (self.window_len - 1) as f64 / 2.0;
        let raw: Vec<f64> = (0..self.window_len)
            .map(|i| {
                let d = (i as f64 - center).abs();
                if d <= 5.0 * tau {
                    (-d / tau).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let norm = raw.iter().map(|w| w * w).sum::<f64>().sqrt();
        raw.into_iter().map(|w| w / norm).collect()
    }
}

/// Digitizer record geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceGeometry {
    pub sample_rate_hz: f64,
    /// Duration of one full phase scan, seconds.
    pub scan_duration: f64,
    /// Spectral FWHM of the extraction mode, Hz.
    pub mode_fwhm_hz: f64,
}

impl Default for TraceGeometry {
    fn default() -> Self {
        Self {
            sample_rate_hz: 100e6,
            scan_duration: 500e-6,
            mode_fwhm_hz: 6e6,
        }
    }
}

impl TraceGeometry {
    pub fn trace_len(&self) -> usize {
        (self.sample_rate_hz * self.scan_duration).round() as usize
    }

    /// Samples per window when the scan is cut into `n_windows` pieces; the
    /// remainder at the end of the trace is discarded.
    pub fn window_len(&self, n_windows: usize) -> usize {
        self.trace_len() / n_windows.max(1)
    }

    pub fn windows(&self, n_windows: usize) -> WindowSpec {
        WindowSpec {
            offset: 0,
            window_len: self.window_len(n_windows),
            count: n_windows,
        }
    }

    pub fn mode(&self, n_windows: usize) -> Result<TemporalMode> {
        TemporalMode::double_exponential(self.mode_fwhm_hz, self.sample_rate_hz, self.window_len(n_windows))
    }
}

/// Consecutive windows `[offset + j·window_len, offset + (j+1)·window_len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub offset: usize,
    pub window_len: usize,
    pub count: usize,
}

impl WindowSpec {
    pub fn end(&self) -> usize {
        self.offset + self.window_len * self.count
    }

    pub fn start(&self, j: usize) -> usize {
        self.offset + j * self.window_len
    }
}

/// Raw sample stream as stored on disk: 32-bit floats at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrace {
    pub sample_rate_hz: u64,
    pub samples: Vec<f32>,
}

/// Builds a raw trace whose projection on `mode` in window `j` is a Gaussian
/// quadrature with variance `V(ψ_j, θ_j)`.
///
/// Each window holds `q_j f + (z − (f·z) f)` with `z ~ N(0, I)`: the target
/// quadrature along the mode and unit-variance vacuum noise in the orthogonal
/// complement. Samples after the last window are vacuum noise.
pub fn synthesize_trace(
    params_per_window: &[StateParams<f64>],
    phases: &[f64],
    mode: &TemporalMode,
    trace_len: usize,
    key: &StreamKey,
) -> Result<RawTrace> {
    mode.validate()?;
    let n = params_per_window.len();
    if phases.len() != n {
        return Err(Error::ConfigMismatch(format!(
            "{} phases for {} windows",
            phases.len(),
            n
        )));
    }
    let len = mode.window_len;
    if len * n > trace_len {
        return Err(Error::ConfigMismatch(format!(
            "{n} windows of {len} samples exceed trace length {trace_len}"
        )));
    }
    let f = mode.weights();
    let mut samples = Vec::with_capacity(trace_len);
    let mut z = vec![0.0f64; len];
    for (j, (params, &psi)) in params_per_window.iter().zip(phases).enumerate() {
        let mut rng = key.child(j as u64).rng();
        let q = rng.sample::<f64, _>(StandardNormal) * params.variance(psi).sqrt();
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let along: f64 = f.iter().zip(&z).map(|(a, b)| a * b).sum();
        samples.extend(f.iter().zip(&z).map(|(fi, zi)| (zi + (q - along) * fi) as f32));
    }
    let mut rng = key.child(n as u64).rng();
    samples.extend((n * len..trace_len).map(|_| rng.sample::<f64, _>(StandardNormal) as f32));
    Ok(RawTrace {
        sample_rate_hz: mode.sample_rate_hz.round() as u64,
        samples,
    })
}

/// Projects each window of the trace on the mode: `q_j = Σ_t f(t) x(start_j + t)`.
pub fn apply_temporal_mode(trace: &RawTrace, mode: &TemporalMode, windows: &WindowSpec) -> Result<Vec<f64>> {
    mode.validate()?;
    if mode.window_len > windows.window_len {
        return Err(Error::ConfigMismatch(format!(
            "mode spans {} samples but windows hold {}",
            mode.window_len, windows.window_len
        )));
    }
    if windows.end() > trace.samples.len() {
        return Err(Error::ConfigMismatch(format!(
            "windows end at sample {} but the trace has {}",
            windows.end(),
            trace.samples.len()
        )));
    }
    if (mode.sample_rate_hz - trace.sample_rate_hz as f64).abs() > 0.5 {
        return Err(Error::ConfigMismatch(format!(
            "mode sample rate {} Hz differs from trace rate {} Hz",
            mode.sample_rate_hz, trace.sample_rate_hz
        )));
    }
    let f = mode.weights();
    Ok((0..windows.count)
        .map(|j| {
            let start = windows.start(j);
            f.iter()
                .zip(&trace.samples[start..start + f.len()])
                .map(|(w, &x)| w * x as f64)
                .sum()
        })
        .collect())
}
