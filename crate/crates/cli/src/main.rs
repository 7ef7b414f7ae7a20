mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use squeezelab::bounds::uniform_phases;
use squeezelab::estimators::{dhd_estimate, fit_estimate, mom_estimate, EstimateResult, Method, MomSolver};
use squeezelab::io::{self, DataFile};
use squeezelab::montecarlo::{self, MomPrior, NonPhysicalPolicy, TheoryCurves};
use squeezelab::numfmt::{sig12, Report};
use squeezelab::simulator::{self, apply_temporal_mode, synthesize_trace, DriftKind};
use squeezelab::{HomodyneScan, PhaseSampling, StreamKey};

use config::{load_base, DataKindArg, OutputFormat, RunConfig, SEED_ENV};

/// Moment-based estimation of squeezed states from homodyne data.
#[derive(Debug, Parser)]
#[command(name = "squeezelab", version)]
struct Cli {
    /// JSON file with configuration keys; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root random seed (default 0, or $SQUEEZELAB_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte-Carlo trials. Does not affect results.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the theoretical variance bounds over an s grid.
    Bounds {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Write synthetic data: a phase scan, a double-homodyne batch or a raw trace.
    Simulate {
        #[arg(value_enum)]
        kind: Option<DataKindArg>,
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// Estimate the state from a scan CSV, DHD CSV or raw trace.
    Estimate {
        input: Option<PathBuf>,
        /// Comma-separated estimators: fit, mom, dhd.
        #[arg(long = "method", value_delimiter = ',')]
        methods: Vec<Method>,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        mom: MomArgs,
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// Monte-Carlo comparison of estimators against the bounds along a family.
    Benchmark {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long = "method", value_delimiter = ',')]
        methods: Vec<Method>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_parser = serde_enum::<NonPhysicalPolicy>)]
        policy: Option<NonPhysicalPolicy>,
        #[arg(long, value_parser = serde_enum::<MomPrior>)]
        mom_prior: Option<MomPrior>,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        mom: MomArgs,
    },
    /// Track a drifting squeezing angle scan by scan.
    Track {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        mom: MomArgs,
        #[command(flatten)]
        drift: DriftArgs,
    },
}

#[derive(Debug, Args)]
struct StateArgs {
    /// Squeezing factor: a value, a comma list, or start:stop[:step].
    #[arg(long)]
    s: Option<String>,
    /// Fixed thermal factor (otherwise κ = 1/√s).
    #[arg(long, conflicts_with = "family")]
    kappa: Option<f64>,
    /// Use the κ = 1/√s family.
    #[arg(long, value_parser = ["kappa-inv-sqrt-s"])]
    family: Option<String>,
    /// Squeezing angle, radians.
    #[arg(long = "phi", allow_negative_numbers = true)]
    phi_s: Option<f64>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Quadrature samples per scan (windows per trace).
    #[arg(long)]
    n_samples: Option<usize>,
    /// Phases cover [0, n·π).
    #[arg(long)]
    range_multiplier: Option<u32>,
    #[arg(long, value_parser = serde_enum::<PhaseSampling>)]
    sampling: Option<PhaseSampling>,
    /// Double-homodyne samples per batch.
    #[arg(long)]
    mu: Option<usize>,
}

#[derive(Debug, Args)]
struct MomArgs {
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_parser = serde_enum::<MomSolver>)]
    solver: Option<MomSolver>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long)]
    sample_rate_hz: Option<f64>,
    #[arg(long)]
    mode_fwhm_hz: Option<f64>,
    /// Seconds per phase scan.
    #[arg(long)]
    scan_duration: Option<f64>,
}

#[derive(Debug, Args)]
struct DriftArgs {
    #[arg(long, value_parser = serde_enum::<DriftKind>)]
    drift_kind: Option<DriftKind>,
    /// Drift correlation time, seconds.
    #[arg(long)]
    drift_tau: Option<f64>,
    /// Drift amplitude, radians.
    #[arg(long)]
    drift_amplitude: Option<f64>,
    /// Seconds per phase scan.
    #[arg(long)]
    scan_duration: Option<f64>,
    /// Record length, seconds.
    #[arg(long)]
    duration: Option<f64>,
}

fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl StateArgs {
    fn apply(self, c: &mut RunConfig) {
        if self.s.is_some() {
            c.s = self.s;
        }
        if self.family.is_some() {
            c.kappa = None;
        }
        if self.kappa.is_some() {
            c.kappa = self.kappa;
        }
        set(&mut c.phi_s, self.phi_s);
    }
}

impl ScanArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.n_samples, self.n_samples);
        set(&mut c.range_multiplier, self.range_multiplier);
        set(&mut c.sampling, self.sampling);
        set(&mut c.mu, self.mu);
    }
}

impl MomArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.max_iter, self.max_iter);
        set(&mut c.tol, self.tol);
        set(&mut c.solver, self.solver);
    }
}

impl TraceArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.sample_rate_hz, self.sample_rate_hz);
        set(&mut c.mode_fwhm_hz, self.mode_fwhm_hz);
        set(&mut c.scan_duration, self.scan_duration);
    }
}

impl DriftArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.drift_kind, self.drift_kind);
        set(&mut c.drift_tau, self.drift_tau);
        set(&mut c.drift_amplitude, self.drift_amplitude);
        set(&mut c.scan_duration, self.scan_duration);
        set(&mut c.duration, self.duration);
    }
}

/// Strongest measured point: L = −3.4 dB on the κ = 1/√s family.
const DEFAULT_STATE_S: &str = "0.2089";
const DEFAULT_BOUNDS_GRID: &str = "0.2:1.0:0.05";
const DEFAULT_BENCH_GRID: &str = "0.21,0.3,0.4,0.5,0.7";

/// Applies CLI values over the base config and fills command defaults.
fn resolve(cli: Cli) -> Result<(RunConfig, CommandKind)> {
    let mut c = load_base(cli.config.as_deref(), std::env::var(SEED_ENV).ok())?;
    set(&mut c.seed, cli.seed);
    if cli.workers.is_some() {
        c.workers = cli.workers;
    }
    if cli.output.is_some() {
        c.output = cli.output;
    }
    let explicit_format = cli.format;
    let (kind, default_s, default_format) = match cli.command {
        Command::Bounds { state, scan } => {
            state.apply(&mut c);
            scan.apply(&mut c);
            (CommandKind::Bounds, DEFAULT_BOUNDS_GRID, OutputFormat::Csv)
        }
        Command::Simulate { kind, state, scan, trace } => {
            set(&mut c.kind, kind);
            state.apply(&mut c);
            scan.apply(&mut c);
            trace.apply(&mut c);
            (CommandKind::Simulate, DEFAULT_STATE_S, OutputFormat::Csv)
        }
        Command::Estimate { input, methods, scan, mom, trace } => {
            if input.is_some() {
                c.input = input;
            }
            if !methods.is_empty() {
                c.methods = methods;
            }
            scan.apply(&mut c);
            mom.apply(&mut c);
            trace.apply(&mut c);
            (CommandKind::Estimate, DEFAULT_STATE_S, OutputFormat::Json)
        }
        Command::Benchmark { state, methods, trials, policy, mom_prior, scan, mom } => {
            state.apply(&mut c);
            if !methods.is_empty() {
                c.methods = methods;
            }
            set(&mut c.trials, trials);
            set(&mut c.policy, policy);
            set(&mut c.mom_prior, mom_prior);
            scan.apply(&mut c);
            mom.apply(&mut c);
            if c.methods.is_empty() {
                c.methods = Method::ALL.to_vec();
            }
            (CommandKind::Benchmark, DEFAULT_BENCH_GRID, OutputFormat::Csv)
        }
        Command::Track { state, scan, mom, drift } => {
            state.apply(&mut c);
            scan.apply(&mut c);
            mom.apply(&mut c);
            drift.apply(&mut c);
            (CommandKind::Track, DEFAULT_STATE_S, OutputFormat::Csv)
        }
    };
    c.command = kind.name().to_string();
    if c.s.is_none() && kind != CommandKind::Estimate {
        c.s = Some(default_s.to_string());
    }
    // the file format key applies unless the command line says otherwise
    c.format = explicit_format.unwrap_or(if config_sets_format(cli.config.as_deref())? {
        c.format
    } else {
        default_format
    });
    Ok((c, kind))
}

fn config_sets_format(path: Option<&Path>) -> Result<bool> {
    let Some(path) = path else { return Ok(false) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    Ok(v.get("format").is_some())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CommandKind {
    Bounds,
    Simulate,
    Estimate,
    Benchmark,
    Track,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Bounds => "bounds",
            CommandKind::Simulate => "simulate",
            CommandKind::Estimate => "estimate",
            CommandKind::Benchmark => "benchmark",
            CommandKind::Track => "track",
        }
    }
}

fn emit(c: &RunConfig, text: &str) -> Result<()> {
    match &c.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn config_comment(c: &RunConfig) -> String {
    format!("# config: {}\n", c.echo())
}

fn config_value(c: &RunConfig) -> Value {
    serde_json::to_value(c).expect("config serializes")
}

fn cmd_bounds(c: &RunConfig) -> Result<()> {
    let family = c.family();
    let mut rows = Vec::new();
    for s in c.s_values()? {
        let st = family.state(s, c.phi_s)?;
        rows.push((st, TheoryCurves::at(&st, c.n_samples, c.mu)));
    }
    let text = match c.format {
        OutputFormat::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(st, curves)| json!({ "state": st, "curves": curves }))
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&json!({ "config": config_value(c), "rows": rows }))?)
        }
        OutputFormat::Csv => {
            let mut out = config_comment(c);
            let mut header = vec!["s".to_string(), "kappa".into(), "phi_s".into()];
            for name in ["crb_homodyne", "fit_prediction", "crb_dhd", "qcrb"] {
                for p in ["s", "kappa", "phi"] {
                    header.push(format!("{name}_var_{p}"));
                }
            }
            header.push("n_samples".into());
            header.push("mu".into());
            out.push_str(&header.join(","));
            out.push('\n');
            for (st, curves) in &rows {
                let mut fields = vec![sig12(st.s), sig12(st.kappa), sig12(st.phi_s)];
                for b in [curves.crb_homodyne, curves.fit_prediction, curves.crb_dhd, curves.qcrb] {
                    fields.extend(b.as_array().map(sig12));
                }
                fields.push(c.n_samples.to_string());
                fields.push(c.mu.to_string());
                out.push_str(&fields.join(","));
                out.push('\n');
            }
            out
        }
    };
    emit(c, &text)
}

fn cmd_simulate(c: &RunConfig) -> Result<()> {
    let path = c.output.as_deref().context("simulate needs --output <file>")?;
    let st = c.single_state()?;
    let key = StreamKey::new(c.seed);
    let echo = format!("config: {}", c.echo());
    let written = match c.kind {
        DataKindArg::Scan => {
            let scan = simulator::sample_homodyne_scan(&st, &c.scan(), &key)?;
            io::write_scan(path, &scan, Some(&echo))?;
            scan.len()
        }
        DataKindArg::Dhd => {
            let batch = simulator::sample_dhd(&st, c.mu, &key)?;
            io::write_dhd(path, &batch, Some(&echo))?;
            batch.mu()
        }
        DataKindArg::Trace => {
            let (geometry, phases) = trace_layout(c)?;
            let mode = geometry.mode(c.n_samples)?;
            let states = vec![st; c.n_samples];
            let trace = synthesize_trace(&states, &phases, &mode, geometry.trace_len(), &key)?;
            io::write_trace(path, &trace)?;
            trace.samples.len()
        }
    };
    println!("# config: {}", c.echo());
    println!("wrote {written} samples to {}", path.display());
    Ok(())
}

/// Trace geometry and the LO phase of each window. Window phases must be
/// reproducible from the configuration alone, so only equispaced ramps are
/// supported for traces.
fn trace_layout(c: &RunConfig) -> Result<(simulator::TraceGeometry, Vec<f64>)> {
    if c.sampling != PhaseSampling::Equispaced {
        bail!("raw traces support only equispaced phase sampling");
    }
    c.scan().validate()?;
    Ok((c.geometry(), uniform_phases(c.n_samples, c.range_multiplier)))
}

fn estimate_json(est: &EstimateResult<f64>) -> Value {
    let se = est.std_errors();
    json!({
        "method": est.method,
        "s": Report(est.params.s),
        "kappa": Report(est.params.kappa),
        "phi_s": Report(est.params.phi_s),
        "std_errors": { "s": Report(se[0]), "kappa": Report(se[1]), "phi_s": Report(se[2]) },
        "squeezing_db": Report(est.squeezing_db()),
        "squeezing_db_std": Report(est.squeezing_db_std()),
        "purity": Report(est.params.purity()),
        "physical": est.physical,
        "flags": est.flags,
        "iterations": est.iterations,
        "n_samples": est.n_samples,
    })
}

fn cmd_estimate(c: &RunConfig) -> Result<()> {
    let input = c.input.as_deref().context("estimate needs an input file")?;
    let data = io::read_data(input)?;
    let (kind, results) = match data {
        DataFile::Scan(scan) => ("scan", estimate_scan(c, &scan)?),
        DataFile::Trace(trace) => {
            let (geometry, phases) = trace_layout(c)?;
            let mode = geometry.mode(c.n_samples)?;
            let q = apply_temporal_mode(&trace, &mode, &geometry.windows(c.n_samples))?;
            ("trace", estimate_scan(c, &HomodyneScan::new(phases, q)?)?)
        }
        DataFile::Dhd(batch) => {
            if c.methods.iter().any(|&m| m != Method::Dhd) {
                bail!("double-homodyne input supports only --method dhd");
            }
            ("dhd", vec![dhd_estimate(&batch)?])
        }
    };
    let text = match c.format {
        OutputFormat::Json => {
            let doc = json!({
                "config": config_value(c),
                "input": input.display().to_string(),
                "kind": kind,
                "estimates": results.iter().map(estimate_json).collect::<Vec<_>>(),
            });
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        OutputFormat::Csv => {
            let mut out = config_comment(c);
            out.push_str("method,s,kappa,phi_s,se_s,se_kappa,se_phi_s,squeezing_db,squeezing_db_std,physical,iterations\n");
            for est in &results {
                let se = est.std_errors();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    est.method,
                    sig12(est.params.s),
                    sig12(est.params.kappa),
                    sig12(est.params.phi_s),
                    sig12(se[0]),
                    sig12(se[1]),
                    sig12(se[2]),
                    sig12(est.squeezing_db()),
                    sig12(est.squeezing_db_std()),
                    est.physical,
                    est.iterations
                );
            }
            out
        }
    };
    emit(c, &text)
}

fn estimate_scan(c: &RunConfig, scan: &HomodyneScan<f64>) -> Result<Vec<EstimateResult<f64>>> {
    let methods = if c.methods.is_empty() { vec![Method::Mom] } else { c.methods.clone() };
    methods
        .iter()
        .map(|m| match m {
            Method::Fit => Ok(fit_estimate(scan)?),
            Method::Mom => Ok(mom_estimate(scan, None, &c.mom())?),
            Method::Dhd => bail!("--method dhd needs double-homodyne input (q1,p2)"),
        })
        .collect()
}

fn cmd_benchmark(c: &RunConfig) -> Result<()> {
    let rows = montecarlo::sweep_family(&c.s_values()?, &c.methods, c.family(), c.phi_s, &c.bench(), c.trials, c.seed)?;
    let text = match c.format {
        OutputFormat::Csv => config_comment(c) + &montecarlo::sweep_csv(&rows),
        OutputFormat::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&json!({ "config": config_value(c), "rows": rows }))?
        ),
    };
    emit(c, &text)
}

fn cmd_track(c: &RunConfig) -> Result<()> {
    let base = c.single_state()?;
    let points = montecarlo::track_angle(&c.drift(), &base, &c.track(), c.seed)?;
    let summary = montecarlo::summarize_track(&points, c.scan_duration);
    let text = match c.format {
        OutputFormat::Csv => format!(
            "{}# summary: {}\n{}",
            config_comment(c),
            serde_json::to_string(&summary)?,
            montecarlo::track_csv(&points)
        ),
        OutputFormat::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&json!({ "config": config_value(c), "summary": summary, "points": points }))?
        ),
    };
    emit(c, &text)
}

fn run(cli: Cli) -> Result<()> {
    let (c, kind) = resolve(cli)?;
    match kind {
        CommandKind::Bounds => cmd_bounds(&c),
        CommandKind::Simulate => cmd_simulate(&c),
        CommandKind::Estimate => cmd_estimate(&c),
        CommandKind::Benchmark => cmd_benchmark(&c),
        CommandKind::Track => cmd_track(&c),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
