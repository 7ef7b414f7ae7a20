//! Repeated simulate → estimate trials, empirical estimator statistics, and
//! comparison against the theoretical bounds.
//!
//! Trials run in parallel on per-trial random streams and are aggregated in a
//! canonical order, so every report is identical for any worker count and any
//! trial ordering.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{crb_dhd, crb_homodyne, fit_variance_prediction, qcrb, BoundVector};
use crate::data::ScanConfig;
use crate::error::{Error, Result};
use crate::estimators::{dhd_estimate, fit_estimate, mom_estimate, next_prior, EstimateResult, Method, MomOptions};
use crate::matrix::SymMatrix3;
use crate::model::{empirical_family, StateParams};
use crate::numfmt::{self, sig12};
use crate::rng::StreamKey;
use crate::scalar::{wrap_to_period, wrapped_difference};
use crate::simulator::{sample_dhd, sample_homodyne_scan, simulate_phase_drift, DriftModel};
use crate::stats;

/// Whether trials flagged non-physical enter the empirical covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonPhysicalPolicy {
    #[default]
    Include,
    Exclude,
}

/// Prior handed to the moment estimator in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomPrior {
    /// Seed from the fit of the same scan.
    #[default]
    Fit,
    /// Use the true parameters.
    Truth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub scan: ScanConfig,
    /// Double-homodyne repetitions per trial.
    pub mu: usize,
    pub mom: MomOptions,
    pub mom_prior: MomPrior,
    pub policy: NonPhysicalPolicy,
    /// Worker threads; `None` uses the global pool. Results do not depend on it.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scan: ScanConfig::default(),
            mu: 900,
            mom: MomOptions::default(),
            mom_prior: MomPrior::Fit,
            policy: NonPhysicalPolicy::Include,
            workers: None,
        }
    }
}

/// Empirical statistics over the trials admitted by one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyStats {
    pub policy: NonPhysicalPolicy,
    pub used_trials: usize,
    #[serde(serialize_with = "numfmt::serialize_f64_slice")]
    pub mean: [f64; 3],
    #[serde(serialize_with = "numfmt::serialize_f64_slice")]
    pub bias: [f64; 3],
    pub empirical_cov: SymMatrix3<f64>,
    /// χ² standard error of each empirical variance, `√(2/(n−1)) · var`.
    #[serde(serialize_with = "numfmt::serialize_f64_slice")]
    pub var_stderr: [f64; 3],
    /// Empirical variance divided by the bound, per parameter.
    #[serde(serialize_with = "numfmt::serialize_f64_slice")]
    pub saturation_ratio: [f64; 3],
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub squeezing_db_mean: f64,
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub squeezing_db_std: f64,
}

impl PolicyStats {
    pub fn variances(&self) -> [f64; 3] {
        self.empirical_cov.diag()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub truth: StateParams<f64>,
    pub method: Method,
    pub trials: usize,
    /// `N_ψ` for homodyne methods, `μ` for double homodyne.
    pub n_samples: usize,
    /// The theoretical variance the estimator is compared against.
    pub bound: BoundVector,
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub nonphysical_rate: f64,
    /// Fraction of trials whose fitted curve dips below zero somewhere, the
    /// narrower of the two non-physicality tests. The full rate above also
    /// counts estimates with `κ < 1`, which noise produces near pure states.
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub sign_violation_rate: f64,
    /// Statistics under the configured policy.
    pub stats: PolicyStats,
    /// Statistics under the other policy.
    pub alternate: PolicyStats,
    /// `iteration_histogram[k]` counts trials that took `k` iterations.
    pub iteration_histogram: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TrialOutcome {
    values: [f64; 3],
    physical: bool,
    sign_violation: bool,
    iterations: usize,
}

fn outcome(est: &EstimateResult<f64>) -> TrialOutcome {
    TrialOutcome {
        values: est.params.as_array(),
        physical: est.physical,
        sign_violation: est.flags.nonphysical,
        iterations: est.iterations,
    }
}

fn run_in_pool<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// The bound each method is benchmarked against: the fit prediction for the
/// fit, the homodyne CRB for the moment estimator, the DHD CRB for DHD.
pub fn reference_bound(method: Method, truth: &StateParams<f64>, cfg: &BenchConfig) -> BoundVector {
    match method {
        Method::Fit => fit_variance_prediction(truth, cfg.scan.n_samples),
        Method::Mom => crb_homodyne(truth, cfg.scan.n_samples),
        Method::Dhd => crb_dhd(truth, cfg.mu),
    }
}

fn single_trial(truth: &StateParams<f64>, method: Method, cfg: &BenchConfig, key: &StreamKey) -> Result<TrialOutcome> {
    let est = match method {
        Method::Fit => fit_estimate(&sample_homodyne_scan(truth, &cfg.scan, key)?)?,
        Method::Mom => {
            let scan = sample_homodyne_scan(truth, &cfg.scan, key)?;
            let prior = match cfg.mom_prior {
                MomPrior::Fit => None,
                MomPrior::Truth => Some(truth),
            };
            mom_estimate(&scan, prior, &cfg.mom)?
        }
        Method::Dhd => dhd_estimate(&sample_dhd(truth, cfg.mu, key)?)?,
    };
    Ok(outcome(&est))
}

/// Runs `trials` independent simulate → estimate trials at `truth`.
///
/// Trial `t` draws its data from stream `seed → t`, so the fit and the moment
/// estimator see identical scans for the same seed.
pub fn run_trials(
    truth: &StateParams<f64>,
    method: Method,
    cfg: &BenchConfig,
    trials: usize,
    seed: u64,
) -> Result<TrialReport> {
    if trials < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 trials, got {trials}")));
    }
    cfg.scan.validate()?;
    let root = StreamKey::new(seed);
    let outcomes = run_in_pool(cfg.workers, || {
        (0..trials)
            .into_par_iter()
            .map(|t| single_trial(truth, method, cfg, &root.child(t as u64)))
            .collect::<Result<Vec<_>>>()
    })??;
    let n_samples = match method {
        Method::Dhd => cfg.mu,
        _ => cfg.scan.n_samples,
    };
    Ok(summarize(truth, method, cfg, n_samples, outcomes))
}

fn summarize(
    truth: &StateParams<f64>,
    method: Method,
    cfg: &BenchConfig,
    n_samples: usize,
    mut outcomes: Vec<TrialOutcome>,
) -> TrialReport {
    // canonical order makes floating-point sums independent of trial order
    outcomes.sort_by(|a, b| {
        let ka = a.values.map(f64::to_bits);
        let kb = b.values.map(f64::to_bits);
        ka.cmp(&kb)
            .then(a.physical.cmp(&b.physical))
            .then(a.sign_violation.cmp(&b.sign_violation)).then(a.iterations.cmp(&b.iterations))
    });
    let trials = outcomes.len();
    let nonphysical = outcomes
        .iter()
        .filter(|o| !o.physical || o.values.iter().any(|v| !v.is_finite()))
        .count();
    let sign_violations = outcomes.iter().filter(|o| o.sign_violation).count();
    let bound = reference_bound(method, truth, cfg);
    let max_iter = outcomes.iter().map(|o| o.iterations).max().unwrap_or(0);
    let mut iteration_histogram = vec![0; max_iter + 1];
    for o in &outcomes {
        iteration_histogram[o.iterations] += 1;
    }
    let include = policy_stats(truth, &outcomes, &bound, NonPhysicalPolicy::Include);
    let exclude = policy_stats(truth, &outcomes, &bound, NonPhysicalPolicy::Exclude);
    let (stats, alternate) = match cfg.policy {
        NonPhysicalPolicy::Include => (include, exclude),
        NonPhysicalPolicy::Exclude => (exclude, include),
    };
    TrialReport {
        truth: *truth,
        method,
        trials,
        n_samples,
        bound,
        nonphysical_rate: nonphysical as f64 / trials as f64,
        sign_violation_rate: sign_violations as f64 / trials as f64,
        stats,
        alternate,
        iteration_histogram,
    }
}

fn policy_stats(
    truth: &StateParams<f64>,
    outcomes: &[TrialOutcome],
    bound: &BoundVector,
    policy: NonPhysicalPolicy,
) -> PolicyStats {
    let used: Vec<[f64; 3]> = outcomes
        .iter()
        .filter(|o| o.values.iter().all(|v| v.is_finite()))
        .filter(|o| policy == NonPhysicalPolicy::Include || o.physical)
        .map(|o| o.values)
        .collect();
    let n = used.len();
    if n < 2 {
        let nan = [f64::NAN; 3];
        return PolicyStats {
            policy,
            used_trials: n,
            mean: nan,
            bias: nan,
            empirical_cov: SymMatrix3::diagonal(nan),
            var_stderr: nan,
            saturation_ratio: nan,
            squeezing_db_mean: f64::NAN,
            squeezing_db_std: f64::NAN,
        };
    }
    let nf = n as f64;
    let angles: Vec<f64> = used.iter().map(|v| v[2]).collect();
    let phi_mean = stats::axial_mean(&angles);
    let mean = [
        used.iter().map(|v| v[0]).sum::<f64>() / nf,
        used.iter().map(|v| v[1]).sum::<f64>() / nf,
        phi_mean,
    ];
    let mut cov = SymMatrix3::zeros();
    for v in &used {
        let d = [v[0] - mean[0], v[1] - mean[1], wrapped_difference(v[2], phi_mean, PI)];
        cov = cov.add(&SymMatrix3::outer(d, 1.0));
    }
    let cov = cov.scale(1.0 / (nf - 1.0));
    let var = cov.diag();
    let bias = [
        mean[0] - truth.s,
        mean[1] - truth.kappa,
        wrapped_difference(phi_mean, truth.phi_s, PI),
    ];
    let levels: Vec<f64> = used.iter().map(|v| 10.0 * (v[0] * v[1]).log10()).collect();
    let b = bound.as_array();
    PolicyStats {
        policy,
        used_trials: n,
        mean,
        bias,
        empirical_cov: cov,
        var_stderr: var.map(|v| v * (2.0 / (nf - 1.0)).sqrt()),
        saturation_ratio: [var[0] / b[0], var[1] / b[1], var[2] / b[2]],
        squeezing_db_mean: stats::mean(&levels),
        squeezing_db_std: stats::variance(&levels).sqrt(),
    }
}

/// One-parameter family of states swept by [`sweep_family`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "kappa")]
pub enum Family {
    /// `κ = 1/√s`, the relation observed when the temporal mode is varied.
    KappaInvSqrtS,
    FixedKappa(f64),
}

impl Family {
    pub fn state(&self, s: f64, phi_s: f64) -> Result<StateParams<f64>> {
        match *self {
            Family::KappaInvSqrtS => empirical_family(s, phi_s),
            Family::FixedKappa(k) => StateParams::new(s, k, phi_s),
        }
    }
}

/// All theoretical variance curves at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryCurves {
    pub crb_homodyne: BoundVector,
    pub fit_prediction: BoundVector,
    pub crb_dhd: BoundVector,
    pub qcrb: BoundVector,
}

impl TheoryCurves {
    pub fn at(params: &StateParams<f64>, n_samples: usize, mu: usize) -> Self {
        Self {
            crb_homodyne: crb_homodyne(params, n_samples),
            fit_prediction: fit_variance_prediction(params, n_samples),
            crb_dhd: crb_dhd(params, mu),
            qcrb: qcrb(params, n_samples),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub s: f64,
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub kappa: f64,
    pub curves: TheoryCurves,
    pub report: TrialReport,
}

/// Stream seed for a family point; independent of list order and shared by
/// all methods at that point.
fn point_seed(seed: u64, s: f64) -> u64 {
    StreamKey::new(seed).child(s.to_bits()).seed()
}

/// Runs [`run_trials`] for every `(s, method)` pair along `family`.
pub fn sweep_family(
    s_values: &[f64],
    methods: &[Method],
    family: Family,
    phi_s: f64,
    cfg: &BenchConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(s_values.len() * methods.len());
    for &s in s_values {
        let truth = family.state(s, phi_s)?;
        let curves = TheoryCurves::at(&truth, cfg.scan.n_samples, cfg.mu);
        for &method in methods {
            let report = run_trials(&truth, method, cfg, trials, point_seed(seed, s))?;
            rows.push(SweepRow { s, kappa: truth.kappa, curves, report });
        }
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str = "s,kappa,method,parameter,truth,mean,bias,empirical_var,var_stderr,\
bound,saturation_ratio,crb_homodyne,fit_prediction,crb_dhd,qcrb,nonphysical_rate,trials,used_trials,n_samples";

/// One CSV row per `(s, method, parameter)`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let r = &row.report;
        let st = &r.stats;
        let truth = r.truth.as_array();
        let var = st.variances();
        let c = &row.curves;
        for (k, name) in ["s", "kappa", "phi_s"].into_iter().enumerate() {
            let fields = [
                sig12(truth[k]),
                sig12(st.mean[k]),
                sig12(st.bias[k]),
                sig12(var[k]),
                sig12(st.var_stderr[k]),
                sig12(r.bound.as_array()[k]),
                sig12(st.saturation_ratio[k]),
                sig12(c.crb_homodyne.as_array()[k]),
                sig12(c.fit_prediction.as_array()[k]),
                sig12(c.crb_dhd.as_array()[k]),
                sig12(c.qcrb.as_array()[k]),
                sig12(r.nonphysical_rate),
            ];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                sig12(row.s),
                sig12(row.kappa),
                r.method,
                name,
                fields.join(","),
                r.trials,
                st.used_trials,
                r.n_samples
            );
        }
    }
    out
}

/// One scan of an angle-tracking run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackPoint {
    /// Scan start time, seconds.
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub t: f64,
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub phi_true: f64,
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub phi_est: f64,
    /// Predicted standard error `√[F⁻¹]_φφ` at the estimate.
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub half_width: f64,
    pub physical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackConfig {
    pub scan: ScanConfig,
    /// Seconds per phase scan.
    pub scan_duration: f64,
    /// Total record length, seconds.
    pub duration: f64,
    pub mom: MomOptions,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            scan: ScanConfig::default(),
            scan_duration: 500e-6,
            duration: 0.3,
            mom: MomOptions::default(),
        }
    }
}

/// Estimates the squeezing angle scan by scan while it drifts.
///
/// The angle is held fixed within each scan. Each scan's moment estimate
/// seeds the next one.
pub fn track_angle(drift: &DriftModel, base: &StateParams<f64>, cfg: &TrackConfig, seed: u64) -> Result<Vec<TrackPoint>> {
    if !(cfg.scan_duration > 0.0) {
        return Err(Error::InvalidConfig("scan_duration must be > 0".into()));
    }
    let n_scans = (cfg.duration / cfg.scan_duration + 1e-9).floor() as usize;
    if n_scans < 2 {
        return Err(Error::InvalidConfig(format!(
            "duration {} s covers fewer than 2 scans of {} s",
            cfg.duration, cfg.scan_duration
        )));
    }
    let root = StreamKey::new(seed);
    let trajectory = simulate_phase_drift(drift, cfg.duration, &root.child(0))?;
    let scans = root.child(1);
    let mut prior: Option<StateParams<f64>> = None;
    let mut points = Vec::with_capacity(n_scans);
    for k in 0..n_scans {
        let t = k as f64 * cfg.scan_duration;
        let phi_true = wrap_to_period(base.phi_s + trajectory.at(t), PI);
        let truth = StateParams::unchecked(base.s, base.kappa, phi_true);
        let scan = sample_homodyne_scan(&truth, &cfg.scan, &scans.child(k as u64))?;
        let est = mom_estimate(&scan, prior.as_ref(), &cfg.mom)?;
        prior = Some(next_prior(&est.params));
        points.push(TrackPoint {
            t,
            phi_true,
            phi_est: est.params.phi_s,
            half_width: est.predicted_cov.get(2, 2).abs().sqrt(),
            physical: est.physical,
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackSummary {
    pub scans: usize,
    /// RMS of the circular error `φ̃ − φ`.
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub rms_error: f64,
    /// Standard deviation of the estimates about their axial mean.
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub estimate_std: f64,
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub mean_half_width: f64,
    /// Exponential decay time of the estimated angle's autocorrelation, s.
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub autocorrelation_time: f64,
    /// Same, for the true trajectory.
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub true_autocorrelation_time: f64,
}

/// Largest lag, in scans, used for autocorrelation fits.
pub const TRACK_MAX_LAG: usize = 30;
/// Fits stop at the first lag whose autocorrelation drops below this.
pub const TRACK_ACF_FLOOR: f64 = 0.1;

pub fn estimated_angles(points: &[TrackPoint]) -> Vec<f64> {
    stats::unwrap_angles(&points.iter().map(|p| p.phi_est).collect::<Vec<_>>(), PI)
}

pub fn true_angles(points: &[TrackPoint]) -> Vec<f64> {
    stats::unwrap_angles(&points.iter().map(|p| p.phi_true).collect::<Vec<_>>(), PI)
}

pub fn summarize_track(points: &[TrackPoint], scan_duration: f64) -> TrackSummary {
    let n = points.len() as f64;
    let rms_error = (points
        .iter()
        .map(|p| wrapped_difference(p.phi_est, p.phi_true, PI).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let est: Vec<f64> = points.iter().map(|p| p.phi_est).collect();
    let m = stats::axial_mean(&est);
    let dev: Vec<f64> = est.iter().map(|&x| wrapped_difference(x, m, PI)).collect();
    let tau = |xs: Vec<f64>| {
        let acf = stats::autocorrelation(&xs, TRACK_MAX_LAG);
        stats::decay_time(&acf, scan_duration, TRACK_ACF_FLOOR).unwrap_or(f64::NAN)
    };
    TrackSummary {
        scans: points.len(),
        rms_error,
        estimate_std: stats::variance(&dev).sqrt(),
        mean_half_width: points.iter().map(|p| p.half_width).sum::<f64>() / n,
        autocorrelation_time: tau(estimated_angles(points)),
        true_autocorrelation_time: tau(true_angles(points)),
    }
}

pub const TRACK_CSV_HEADER: &str = "t_s,phi_true_rad,phi_est_rad,half_width_rad,physical";

pub fn track_csv(points: &[TrackPoint]) -> String {
    let mut out = String::from(TRACK_CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            sig12(p.t),
            sig12(p.phi_true),
            sig12(p.phi_est),
            sig12(p.half_width),
            p.physical
        );
    }
    out
}
