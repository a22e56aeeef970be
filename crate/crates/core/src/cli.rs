//! Command-line front end: `params`, `simulate`, `converge`, `extinct`.
//!
//! Settings come from an optional flat JSON file (`--config`) whose keys match
//! the long flag names with `-` replaced by `_`; flags given on the command
//! line override the file.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical
//! degeneracy.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::harness::bounds::{delta_threshold, DeltaThreshold, HForm, ThresholdKind};
use crate::harness::convergence::{strong_error_study, ConvergenceConfig};
use crate::harness::extinction::{extinction_study, ExtinctionConfig};
use crate::harness::report::{write_convergence_csv, write_extinction_csv, write_trajectory_csv, Summary};
use crate::model::{derive, moment_constant_kp, Preset, Regime, SisParams};
use crate::paths::{write_dump, BrownianGrid, IncrementStream};
use crate::schemes::{default_cap_multiplier, run_with_increments, Recording, SchemeConfig, SchemeKind, StepSize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "sis-tem", version, about = "Stochastic SIS simulation with the logarithmic truncated Euler-Maruyama scheme")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print derived quantities, the extinction regime and step-size thresholds.
    Params(RunArgs),
    /// Write sample trajectories as CSV, one file per path.
    Simulate(RunArgs),
    /// Strong-error study against a fine reference on the same Brownian paths.
    Converge(RunArgs),
    /// Finite-horizon extinction study of the truncated scheme.
    Extinct(RunArgs),
}

/// Every setting, as read from `--config` and/or flags.
#[derive(Debug, Default, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Flat JSON file with any of these settings.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Parameter preset: small-noise, large-noise or weak-noise.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Total population N.
    #[arg(long, allow_negative_numbers = true)]
    pub n: Option<f64>,
    /// Initial infected count.
    #[arg(long, allow_negative_numbers = true)]
    pub i0: Option<f64>,
    /// em, logem or logtem.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of Monte Carlo paths M.
    #[arg(long)]
    pub paths: Option<usize>,
    /// desk or paper.
    #[arg(long)]
    pub scale: Option<String>,
    /// printed or derived.
    #[arg(long)]
    pub h_form: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 or absent uses all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Cap multiplier K of the truncated scheme.
    #[arg(long)]
    pub k: Option<f64>,
    /// Horizon T in days.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Step 2^-l for `simulate` and `extinct`.
    #[arg(long)]
    pub step_exponent: Option<u32>,
    /// Comma-separated step exponents for `converge`.
    #[arg(long, value_delimiter = ',')]
    pub step_exponents: Option<Vec<u32>>,
    #[arg(long)]
    pub reference_exponent: Option<u32>,
    /// Explicit step size (overrides `step_exponent`).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Moment order of the strong error.
    #[arg(long)]
    pub p: Option<f64>,
    /// Extinction threshold in individuals.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Record every n-th step in `simulate`.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Also write the fine Brownian increments of each path (`simulate`, dyadic steps).
    #[arg(long)]
    pub dump_increments: Option<bool>,
    /// Write `runtime_seconds` as 0 so summaries are byte-reproducible.
    #[arg(long)]
    pub no_timing: Option<bool>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: RunConfig,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_IO,
            Error::Overflow(_) | Error::Numerical(_) | Error::DegenerateFit(_) => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        };
        CliError { code, message: e.to_string() }
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError { code: EXIT_CONFIG, message: msg.into() }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
}

macro_rules! merge {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    /// Reads a flat JSON config.
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    /// Overlays every setting present in `other`.
    pub fn overlay(&mut self, other: &RunConfig) {
        merge!(self, other; preset, beta, mu, gamma, sigma, n, i0, scheme, seed, paths, scale,
               h_form, out, threads, k, horizon, step_exponent, step_exponents,
               reference_exponent, dt, p, threshold, stride, dump_increments, no_timing);
    }

    /// Model parameters: the preset (default small-noise, `I₀ = 1`) with
    /// individual overrides, validated.
    pub fn params(&self) -> Result<SisParams<f64>, Error> {
        let preset = match &self.preset {
            None => Preset::SmallNoise,
            Some(s) => Preset::parse(s).ok_or_else(|| Error::Config(format!("unknown preset '{s}'")))?,
        };
        let base = SisParams {
            beta: 0.5,
            mu: 20.0,
            gamma: 25.0,
            sigma: preset.sigma(),
            cap_n: 100.0,
            i0: 1.0,
        };
        let p = SisParams {
            beta: self.beta.unwrap_or(base.beta),
            mu: self.mu.unwrap_or(base.mu),
            gamma: self.gamma.unwrap_or(base.gamma),
            sigma: self.sigma.unwrap_or(base.sigma),
            cap_n: self.n.unwrap_or(base.cap_n),
            i0: self.i0.unwrap_or(base.i0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn scheme_kind(&self) -> Result<SchemeKind, Error> {
        match &self.scheme {
            None => Ok(SchemeKind::LogTem),
            Some(s) => SchemeKind::parse(s).ok_or_else(|| Error::Config(format!("unknown scheme '{s}'"))),
        }
    }

    pub fn h_form(&self) -> Result<HForm, Error> {
        match &self.h_form {
            None => Ok(HForm::AsDerived),
            Some(s) => HForm::parse(s).ok_or_else(|| Error::Config(format!("unknown h form '{s}'"))),
        }
    }

    pub fn paper_scale(&self) -> Result<bool, Error> {
        match self.scale.as_deref() {
            None | Some("desk") => Ok(false),
            Some("paper") => Ok(true),
            Some(s) => Err(Error::Config(format!("unknown scale '{s}'"))),
        }
    }

    fn step(&self, default_exponent: Option<u32>, default_dt: f64) -> Result<StepSize<f64>, Error> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
            return Ok(StepSize::Explicit(dt));
        }
        Ok(match self.step_exponent.or(default_exponent) {
            Some(l) => StepSize::Dyadic(l),
            None => StepSize::Explicit(default_dt),
        })
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn validate_common(&self) -> Result<(), Error> {
        self.params()?;
        self.scheme_kind()?;
        self.h_form()?;
        self.paper_scale()?;
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("horizon must be positive, got {h}")));
            }
        }
        if self.paths == Some(0) {
            return Err(Error::Config("paths must be >= 1".into()));
        }
        if let Some(k) = self.k {
            if !(k > 0.0) {
                return Err(Error::Config(format!("k must be positive, got {k}")));
            }
        }
        Ok(())
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(err, "{e}");
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => EXIT_CONFIG,
            };
        }
    };
    let (name, args) = match &cli.command {
        Command::Params(a) => ("params", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Converge(a) => ("converge", a),
        Command::Extinct(a) => ("extinct", a),
    };
    let result = resolve(&args.config).and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads.unwrap_or(0))
            .build()
            .map_err(|e| config_error(format!("thread pool: {e}")))?;
        pool.install(|| match name {
            "params" => cmd_params(&cfg),
            "simulate" => cmd_simulate(&cfg),
            "converge" => cmd_converge(&cfg),
            _ => cmd_extinct(&cfg),
        })
    });
    match result {
        Ok(text) => {
            let _ = writeln!(out, "{}", text.trim_end());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn resolve(flags: &RunConfig) -> Result<RunConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    cfg.overlay(flags);
    cfg.validate_common()?;
    Ok(cfg)
}

fn cmd_params(cfg: &RunConfig) -> Result<String, CliError> {
    let params = cfg.params()?;
    let d = derive(&params)?;
    let k = match cfg.k {
        Some(k) => k,
        None => default_cap_multiplier(&params)?,
    };
    let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"));
    let mut text = String::new();
    let mut line = |s: String| {
        text.push_str(&s);
        text.push('\n');
    };
    line(format!(
        "beta = {}, mu = {}, gamma = {}, sigma = {}, N = {}, I0 = {}",
        params.beta, params.mu, params.gamma, params.sigma, params.cap_n, params.i0
    ));
    line(format!("eta = {:.6}", d.eta));
    line(format!("R0_det = {}", opt(d.r0_det)));
    line(format!("R0_stoch = {}", opt(d.r0_stoch)));
    line(format!("ext_bound_a = {:.6}", d.ext_bound_a));
    line(format!("ext_bound_b = {}", opt(d.ext_bound_b)));
    line(format!("regime = {}", d.regime));
    if let Ok(kp) = moment_constant_kp(&params, 1.0, cfg.horizon.unwrap_or(1.0)) {
        let v = if kp.saturated { "saturated".to_string() } else { format!("{:.6e}", kp.value) };
        line(format!("K_1 (T = {}) = {v}", cfg.horizon.unwrap_or(1.0)));
    }
    line(format!("K = {k:.6}"));
    let which = match d.regime {
        Regime::ExtinctSmallNoise => Some(("delta_star", ThresholdKind::StarA)),
        Regime::ExtinctLargeNoise => Some(("delta_star_star", ThresholdKind::StarB)),
        Regime::Unclassified => None,
    };
    if let Some((label, kind)) = which {
        let v = match delta_threshold(&params, k, kind)? {
            Some(DeltaThreshold::Root(r)) => format!("{r:.10e}"),
            Some(DeltaThreshold::AllAdmissible) => "all steps in (0, 1) admissible".to_string(),
            None => "none".to_string(),
        };
        line(format!("{label} = {v}"));
    }
    Ok(text)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn runtime(cfg: &RunConfig, start: Instant) -> f64 {
    if cfg.no_timing.unwrap_or(false) {
        0.0
    } else {
        start.elapsed().as_secs_f64()
    }
}

fn cmd_simulate(cfg: &RunConfig) -> Result<String, CliError> {
    let params = cfg.params()?;
    let kind = cfg.scheme_kind()?;
    let step = cfg.step(Some(6), 1e-2)?;
    let horizon = cfg.horizon.unwrap_or(50.0);
    let paths = cfg.paths.unwrap_or(10);
    let seed = cfg.seed.unwrap_or(0);
    let stride = cfg.stride.unwrap_or(1);
    if stride == 0 {
        return Err(config_error("stride must be >= 1"));
    }
    let mut scheme = SchemeConfig::new(kind, step, horizon).with_recording(Recording::Stride(stride));
    scheme.cap_multiplier = cfg.k;
    scheme.validate(&params)?;
    let steps = scheme.steps();
    let dump = cfg.dump_increments.unwrap_or(false);
    let dir = cfg.out_dir();
    create_dir(&dir)?;

    let flags: Vec<(bool, bool, u64)> = (0..paths as u64)
        .into_par_iter()
        .map(|j| -> Result<_, CliError> {
            let incs = match step {
                StepSize::Dyadic(l) => IncrementStream::dyadic(seed, j, l, l, horizon)?,
                StepSize::Explicit(dt) => IncrementStream::explicit(seed, j, dt, steps)?,
            };
            let rec = run_with_increments(&params, &scheme, incs)?;
            let path = dir.join(format!("path_{j:05}.csv"));
            write_trajectory_csv(&rec, create_file(&path)?).map_err(|e| io_error(&path, e))?;
            if let (true, StepSize::Dyadic(l)) = (dump, step) {
                let grid = BrownianGrid::<f64>::generate(seed, j, l, horizon)?;
                let bin = dir.join(format!("path_{j:05}.bin"));
                write_dump(&grid, create_file(&bin)?).map_err(|e| io_error(&bin, e))?;
            }
            Ok((rec.domain_exit, rec.boundary_saturated, rec.truncation_count))
        })
        .collect::<Result<_, _>>()?;

    let exits = flags.iter().filter(|f| f.0).count();
    let saturated = flags.iter().filter(|f| f.1).count();
    let truncations: u64 = flags.iter().map(|f| f.2).sum();
    Ok(format!(
        "wrote {paths} trajectories ({kind}, {steps} steps) to {}; domain exits: {exits}, saturated: {saturated}, truncated steps: {truncations}",
        dir.display()
    ))
}

/// Convergence study settings resolved from the scale preset and overrides.
pub fn convergence_config(cfg: &RunConfig) -> Result<ConvergenceConfig<f64>, Error> {
    let params = cfg.params()?;
    let kind = cfg.scheme_kind()?;
    let seed = cfg.seed.unwrap_or(0);
    let mut c = if cfg.paper_scale()? {
        ConvergenceConfig::paper_scale(params, kind, seed)
    } else {
        ConvergenceConfig::desk(params, kind, seed)
    };
    if let Some(v) = &cfg.step_exponents {
        c.step_exponents = v.clone();
    }
    if let Some(v) = cfg.reference_exponent {
        c.reference_exponent = v;
    }
    if let Some(v) = cfg.p {
        c.p = v;
    }
    if let Some(v) = cfg.paths {
        c.m_paths = v;
    }
    if let Some(v) = cfg.horizon {
        c.t_final = v;
    }
    c.cap_multiplier = cfg.k;
    c.validate()?;
    Ok(c)
}

fn cmd_converge(cfg: &RunConfig) -> Result<String, CliError> {
    let start = Instant::now();
    let study = convergence_config(cfg)?;
    let report = strong_error_study(&study)?;
    let dir = cfg.out_dir();
    create_dir(&dir)?;
    let csv = dir.join("convergence.csv");
    write_convergence_csv(&report, create_file(&csv)?).map_err(|e| io_error(&csv, e))?;
    let summary = Summary::from_convergence(&report, &study.params, runtime(cfg, start))?;
    let json = dir.join("convergence_summary.json");
    summary.write(&json).map_err(|e| io_error(&json, e))?;
    let text = format!(
        "scheme {} | M = {} | p = {} | slope = {:.4} | r^2 = {:.4}",
        report.scheme_kind, report.m_paths, report.p, report.fitted_slope, report.r_squared
    );
    if report.fitted_slope.is_nan() {
        return Err(CliError { code: EXIT_NUMERICAL, message: format!("{text}\nfitted slope is NaN") });
    }
    Ok(text)
}

/// Extinction study settings resolved from defaults and overrides.
pub fn extinction_config(cfg: &RunConfig) -> Result<ExtinctionConfig<f64>, Error> {
    if cfg.scheme_kind()? != SchemeKind::LogTem {
        return Err(Error::Config("extinction study runs the logtem scheme only".into()));
    }
    let params = cfg.params()?;
    let mut c = ExtinctionConfig::desk(params, cfg.seed.unwrap_or(0));
    c.step = cfg.step(None, 1e-2)?;
    if let Some(v) = cfg.horizon {
        c.horizon = v;
    }
    if let Some(v) = cfg.paths {
        c.m_paths = v;
    }
    if let Some(v) = cfg.threshold {
        c.threshold = v;
    }
    c.cap_multiplier = cfg.k;
    c.h_form = cfg.h_form()?;
    c.validate()?;
    Ok(c)
}

fn cmd_extinct(cfg: &RunConfig) -> Result<String, CliError> {
    let start = Instant::now();
    let study = extinction_config(cfg)?;
    let report = extinction_study(&study)?;
    let dir = cfg.out_dir();
    create_dir(&dir)?;
    let csv = dir.join("extinction.csv");
    write_extinction_csv(&report, create_file(&csv)?).map_err(|e| io_error(&csv, e))?;
    let summary = Summary::from_extinction(&report, &study.params, study.seed, runtime(cfg, start));
    let json = dir.join("extinction_summary.json");
    summary.write(&json).map_err(|e| io_error(&json, e))?;
    let bound = report.theoretical_bound.map_or_else(|| "none".to_string(), |b| format!("{b:.4}"));
    Ok(format!(
        "regime {} | M = {} | mean exponent proxy = {:.4} | median = {:.4} | below threshold = {:.3} | bound + h = {bound}",
        report.regime,
        report.exponent_estimates.len(),
        report.mean_exponent,
        report.median_exponent,
        report.fraction_below_threshold
    ))
}
