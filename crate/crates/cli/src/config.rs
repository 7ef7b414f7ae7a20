use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use squeezelab::estimators::{Method, MomOptions, MomSolver};
use squeezelab::montecarlo::{BenchConfig, Family, MomPrior, NonPhysicalPolicy, TrackConfig};
use squeezelab::simulator::{DriftKind, DriftModel, TraceGeometry};
use squeezelab::{PhaseSampling, ScanConfig, StateParams};

pub const SEED_ENV: &str = "SQUEEZELAB_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DataKindArg {
    Scan,
    Dhd,
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Every knob of every command, flat. A run is reproducible from this plus
/// the seed it contains; the resolved value is echoed into each output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    /// Single value, comma list, or `start:stop[:step]` grid.
    pub s: Option<String>,
    /// Fixed thermal factor; `null` selects the `κ = 1/√s` family.
    pub kappa: Option<f64>,
    pub phi_s: f64,
    /// Estimators to run; empty means the command's default.
    pub methods: Vec<Method>,
    pub n_samples: usize,
    pub range_multiplier: u32,
    pub sampling: PhaseSampling,
    pub mu: usize,
    pub trials: usize,
    pub seed: u64,
    pub policy: NonPhysicalPolicy,
    pub mom_prior: MomPrior,
    pub max_iter: usize,
    pub tol: f64,
    pub solver: MomSolver,
    pub kind: DataKindArg,
    pub drift_kind: DriftKind,
    pub drift_tau: f64,
    pub drift_amplitude: f64,
    pub scan_duration: f64,
    pub duration: f64,
    pub sample_rate_hz: f64,
    pub mode_fwhm_hz: f64,
    pub format: OutputFormat,
    pub input: Option<PathBuf>,
    /// Where the artifact itself goes; not echoed so that an output is
    /// byte-identical wherever it is written.
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
    /// Execution detail only; never changes results, so it is not echoed.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let scan = ScanConfig::default();
        let mom = MomOptions::default();
        let geometry = TraceGeometry::default();
        let drift = DriftModel::default();
        Self {
            command: String::new(),
            s: None,
            kappa: None,
            phi_s: 0.3,
            methods: Vec::new(),
            n_samples: scan.n_samples,
            range_multiplier: scan.range_multiplier,
            sampling: scan.sampling,
            mu: 900,
            trials: 3000,
            seed: 0,
            policy: NonPhysicalPolicy::Include,
            mom_prior: MomPrior::Fit,
            max_iter: mom.max_iter,
            tol: mom.tol,
            solver: mom.solver,
            kind: DataKindArg::Scan,
            drift_kind: drift.kind,
            drift_tau: drift.correlation_time,
            drift_amplitude: 0.1,
            scan_duration: geometry.scan_duration,
            duration: 0.3,
            sample_rate_hz: geometry.sample_rate_hz,
            mode_fwhm_hz: geometry.mode_fwhm_hz,
            format: OutputFormat::Csv,
            input: None,
            output: None,
            workers: None,
        }
    }
}

/// Builds the base configuration: defaults, then `SQUEEZELAB_SEED`, then the
/// JSON file. Command-line values are applied on top by the caller.
pub fn load_base(file: Option<&Path>, env_seed: Option<String>) -> Result<RunConfig> {
    let mut merged = serde_json::to_value(RunConfig::default())?;
    if let Some(raw) = env_seed {
        let seed: u64 = raw
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={raw:?} is not an unsigned integer"))?;
        merged["seed"] = Value::from(seed);
    }
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let overlay: Map<String, Value> =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let target = merged.as_object_mut().expect("config serializes to an object");
        for (k, v) in overlay {
            target.insert(k, v);
        }
    }
    serde_json::from_value(merged).context("invalid configuration")
}

/// Parses `a`, `a,b,c`, `a:b` (step 0.05) or `a:b:step`; the stop value is
/// included when it falls on the grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("bad grid `{spec}`"))?;
        let (start, stop, step) = match parts[..] {
            [a, b] => (a, b, 0.05),
            [a, b, c] => (a, b, c),
            _ => bail!("grid `{spec}` must be start:stop or start:stop:step"),
        };
        if !(step > 0.0) || !(stop >= start) {
            bail!("grid `{spec}` needs step > 0 and stop >= start");
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        // round to kill accumulated representation noise like 0.30000000000000004
        Ok((0..=n).map(|i| round_grid(start + i as f64 * step)).collect())
    } else {
        spec.split(',')
            .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad value `{p}` in `{spec}`")))
            .collect()
    }
}

fn round_grid(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl RunConfig {
    pub fn family(&self) -> Family {
        match self.kappa {
            Some(k) => Family::FixedKappa(k),
            None => Family::KappaInvSqrtS,
        }
    }

    pub fn s_values(&self) -> Result<Vec<f64>> {
        let spec = self.s.as_deref().context("no s value given")?;
        let values = parse_grid(spec)?;
        if values.is_empty() {
            bail!("empty s grid `{spec}`");
        }
        Ok(values)
    }

    pub fn single_state(&self) -> Result<StateParams<f64>> {
        let values = self.s_values()?;
        if values.len() != 1 {
            bail!("this command needs a single s value, got `{}`", self.s.as_deref().unwrap_or(""));
        }
        Ok(self.family().state(values[0], self.phi_s)?)
    }

    pub fn scan(&self) -> ScanConfig {
        ScanConfig {
            n_samples: self.n_samples,
            range_multiplier: self.range_multiplier,
            sampling: self.sampling,
        }
    }

    pub fn mom(&self) -> MomOptions {
        MomOptions { max_iter: self.max_iter, tol: self.tol, solver: self.solver }
    }

    pub fn bench(&self) -> BenchConfig {
        BenchConfig {
            scan: self.scan(),
            mu: self.mu,
            mom: self.mom(),
            mom_prior: self.mom_prior,
            policy: self.policy,
            workers: self.workers,
        }
    }

    pub fn drift(&self) -> DriftModel {
        DriftModel {
            kind: self.drift_kind,
            correlation_time: self.drift_tau,
            step_interval: self.scan_duration,
            amplitude: self.drift_amplitude,
        }
    }

    pub fn track(&self) -> TrackConfig {
        TrackConfig {
            scan: self.scan(),
            scan_duration: self.scan_duration,
            duration: self.duration,
            mom: self.mom(),
        }
    }

    pub fn geometry(&self) -> TraceGeometry {
        TraceGeometry {
            sample_rate_hz: self.sample_rate_hz,
            scan_duration: self.scan_duration,
            mode_fwhm_hz: self.mode_fwhm_hz,
        }
    }

    /// Single-line JSON of the resolved configuration.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("0.2, 0.3").unwrap(), vec![0.2, 0.3]);
        let g = parse_grid("0.2:1.0:0.05").unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g[2], 0.3);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(parse_grid("0.2:1.0").unwrap().len(), 17);
        assert!(parse_grid("1:0.5").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn env_then_file_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"trials": 12, "seed": 5}"#).unwrap();
        let c = load_base(Some(&path), Some("9".into())).unwrap();
        assert_eq!((c.trials, c.seed), (12, 5));
        let c = load_base(None, Some("9".into())).unwrap();
        assert_eq!(c.seed, 9);
        assert!(load_base(None, Some("nine".into())).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"trails": 12}"#).unwrap();
        assert!(load_base(Some(&path), None).is_err());
    }

    #[test]
    fn echo_round_trips_and_omits_workers() {
        let mut c = RunConfig { workers: Some(8), s: Some("0.3".into()), ..RunConfig::default() };
        c.methods = vec![Method::Fit, Method::Mom];
        let echo = c.echo();
        assert!(!echo.contains("workers"));
        assert!(!RunConfig { output: Some("x.csv".into()), ..c.clone() }.echo().contains("x.csv"));
        let back: RunConfig = serde_json::from_str(&echo).unwrap();
        assert_eq!(back, RunConfig { workers: None, ..c });
    }
}
