//! Classical, logarithmic and logarithmic truncated Euler–Maruyama integrators.
//!
//! The logarithmic schemes step the transformed state `y` and map back with the
//! sigmoid, so every finite iterate corresponds to an infected count in
//! `(0, N)`. The truncated variant additionally caps `y` at `log(K Δ^{-1/2})`,
//! which keeps `eʸ` bounded by `KΔ^{-1/2}` inside the drift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SisParams;
use crate::paths::{dyadic_step, BrownianGrid};
use crate::scalar::Real;
use crate::transform::{self, drift_f, drift_f_raw, inverse_raw, YState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    /// Euler–Maruyama on the infected equation itself.
    #[serde(rename = "em")]
    ClassicalEm,
    /// Euler–Maruyama on the transformed equation.
    #[serde(rename = "logem")]
    LogEm,
    /// Logarithmic Euler–Maruyama followed by the upper cap.
    #[serde(rename = "logtem")]
    LogTem,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::ClassicalEm => "em",
            SchemeKind::LogEm => "logem",
            SchemeKind::LogTem => "logtem",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "em" => Some(SchemeKind::ClassicalEm),
            "logem" => Some(SchemeKind::LogEm),
            "logtem" => Some(SchemeKind::LogTem),
            _ => None,
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Step size, either `2^{-ℓ}` or an arbitrary positive value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize<T> {
    Dyadic(u32),
    Explicit(T),
}

impl<T: Real> StepSize<T> {
    pub fn value(self) -> T {
        match self {
            StepSize::Dyadic(l) => T::of(dyadic_step(l)),
            StepSize::Explicit(dt) => dt,
        }
    }
}

/// Which states a trajectory run keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recording {
    /// Every step.
    Full,
    /// Every `n`-th step plus the final one.
    Stride(usize),
    /// Initial and final state only.
    Endpoints,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig<T> {
    pub kind: SchemeKind,
    pub step: StepSize<T>,
    pub horizon: T,
    /// Cap multiplier `K`; `None` selects `2(1 + e^{Y₀})`. `+∞` disables the cap.
    pub cap_multiplier: Option<T>,
    pub recording: Recording,
    /// Keep the pre-truncation state `Ȳ` alongside each recorded state.
    pub keep_pre_truncation: bool,
}

impl<T: Real> SchemeConfig<T> {
    pub fn new(kind: SchemeKind, step: StepSize<T>, horizon: T) -> Self {
        SchemeConfig {
            kind,
            step,
            horizon,
            cap_multiplier: None,
            recording: Recording::Full,
            keep_pre_truncation: false,
        }
    }

    pub fn with_cap_multiplier(mut self, k: T) -> Self {
        self.cap_multiplier = Some(k);
        self
    }

    pub fn with_recording(mut self, recording: Recording) -> Self {
        self.recording = recording;
        self
    }

    pub fn dt(&self) -> T {
        self.step.value()
    }

    /// Number of steps `⌊T/Δ⌋`, tolerant of rounding in `T/Δ` for decimal steps.
    pub fn steps(&self) -> u64 {
        let ratio = (self.horizon / self.dt()).as_f64();
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as u64
        } else {
            ratio.floor() as u64
        }
    }

    /// Effective cap multiplier for the given start value.
    pub fn cap_multiplier_for(&self, params: &SisParams<T>) -> Result<T> {
        match self.cap_multiplier {
            Some(k) => Ok(k),
            None => default_cap_multiplier(params),
        }
    }

    /// Upper cap on `y`; `+∞` for the uncapped schemes.
    pub fn cap(&self, params: &SisParams<T>) -> Result<T> {
        match self.kind {
            SchemeKind::LogTem => Ok(truncation_cap(self.cap_multiplier_for(params)?, self.dt())),
            _ => Ok(T::infinity()),
        }
    }

    pub fn validate(&self, params: &SisParams<T>) -> Result<()> {
        params.validate()?;
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        let dt = self.dt();
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::Config(format!("step size must be positive, got {dt}")));
        }
        if let Recording::Stride(0) = self.recording {
            return Err(Error::Config("recording stride must be >= 1".into()));
        }
        if self.kind == SchemeKind::LogTem {
            if dt >= T::one() {
                return Err(Error::Config(format!("truncated scheme needs step in (0, 1), got {dt}")));
            }
            let k = self.cap_multiplier_for(params)?;
            let y0 = transform::forward(params.i0, params)?.get();
            let floor = T::one() + y0.exp();
            if !(k > floor) {
                return Err(Error::Config(format!("cap multiplier K = {k} must exceed 1 + e^Y0 = {floor}")));
            }
        }
        Ok(())
    }
}

/// `K = 2(1 + e^{Y₀})`.
pub fn default_cap_multiplier<T: Real>(params: &SisParams<T>) -> Result<T> {
    let y0 = transform::forward(params.i0, params)?.get();
    Ok(T::two() * (T::one() + y0.exp()))
}

/// `log(K Δ^{-1/2})`.
#[inline]
pub fn truncation_cap<T: Real>(k: T, dt: T) -> T {
    (k / dt.sqrt()).ln()
}

#[inline]
fn log_em_raw<T: Real>(y: T, db: T, dt: T, params: &SisParams<T>) -> T {
    y + drift_f_raw(y, params) * dt + params.noise_scale() * db
}

/// `Y_{k+1} = Y_k + F(Y_k)Δ + σN ΔB_k`.
pub fn step_log_em<T: Real>(y: YState<T>, db: T, dt: T, params: &SisParams<T>) -> Result<YState<T>> {
    let f = drift_f(y, params)?;
    let next = y.get() + f * dt + params.noise_scale() * db;
    if next.is_finite() {
        YState::new(next)
    } else {
        Err(Error::Overflow(format!("log-EM step from y = {} left the finite range", y.get())))
    }
}

/// Outcome of one truncated step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemStep<T> {
    pub y: T,
    /// `Ȳ_{k+1}` before the cap was applied.
    pub pre_truncation: T,
    pub truncated: bool,
}

/// `Ȳ = Y_k + F(Y_k)Δ + σN ΔB_k`, `Y_{k+1} = min(Ȳ, cap)`.
///
/// Requires `y ≤ cap`, which bounds `eʸ` inside the drift.
#[inline]
pub fn step_log_tem<T: Real>(y: YState<T>, db: T, dt: T, params: &SisParams<T>, cap: T) -> TemStep<T> {
    let pre = log_em_raw(y.get(), db, dt, params);
    if pre > cap {
        TemStep { y: cap, pre_truncation: pre, truncated: true }
    } else {
        TemStep { y: pre, pre_truncation: pre, truncated: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmStep<T> {
    pub i: T,
    /// The new value is outside `(0, N)`.
    pub domain_exit: bool,
}

/// `I_{k+1} = I_k + (ηI_k − βI_k²)Δ + σI_k(N − I_k)ΔB_k`, unrestricted.
#[inline]
pub fn step_classical_em<T: Real>(i: T, db: T, dt: T, params: &SisParams<T>) -> EmStep<T> {
    let next = i + params.drift_i(i) * dt + params.diffusion_i(i) * db;
    EmStep { i: next, domain_exit: !(next > T::zero() && next < params.cap_n) }
}

/// States of one path under one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub kind: SchemeKind,
    pub dt: T,
    /// Total number of steps taken.
    pub steps: u64,
    /// Step index of each recorded state.
    pub indices: Vec<u64>,
    pub times: Vec<T>,
    /// Transformed states; absent for the classical scheme.
    pub y_states: Option<Vec<T>>,
    pub i_states: Vec<T>,
    /// Whether the recorded state was produced by a capped step.
    pub truncated: Vec<bool>,
    /// `Ȳ` at each recorded index, when requested.
    pub pre_truncation: Option<Vec<T>>,
    pub truncation_count: u64,
    /// Some I-space value rounded onto 0 or N.
    pub boundary_saturated: bool,
    /// Classical scheme left `(0, N)` at some step.
    pub domain_exit: bool,
    pub final_y: Option<T>,
    pub final_i: T,
}

impl<T: Real> TrajectoryRecord<T> {
    /// `S_k = N − I_k` for each recorded state.
    pub fn susceptible(&self, params: &SisParams<T>) -> Vec<T> {
        self.i_states.iter().map(|&i| params.cap_n - i).collect()
    }
}

/// Runs a dyadic-step scheme on increments coarsened from `grid`.
pub fn run_trajectory<T: Real>(
    params: &SisParams<T>,
    config: &SchemeConfig<T>,
    grid: &BrownianGrid<T>,
) -> Result<TrajectoryRecord<T>> {
    let level = match config.step {
        StepSize::Dyadic(l) => l,
        StepSize::Explicit(_) => {
            return Err(Error::Config("grid-driven runs need a dyadic step size".into()));
        }
    };
    if grid.horizon < config.horizon {
        return Err(Error::Config(format!(
            "grid horizon {} shorter than run horizon {}",
            grid.horizon, config.horizon
        )));
    }
    let increments = grid.coarsen(level)?;
    if (increments.len() as u64) < config.steps() {
        return Err(Error::Config("grid does not cover the requested steps".into()));
    }
    run_with_increments(params, config, increments)
}

/// Runs a scheme for `⌊T/Δ⌋` steps, consuming increments in order.
pub fn run_with_increments<T, I>(
    params: &SisParams<T>,
    config: &SchemeConfig<T>,
    increments: I,
) -> Result<TrajectoryRecord<T>>
where
    T: Real,
    I: IntoIterator<Item = T>,
{
    config.validate(params)?;
    let dt = config.dt();
    let steps = config.steps();
    let n = params.cap_n;
    let stride = match config.recording {
        Recording::Full => 1,
        Recording::Stride(s) => s as u64,
        Recording::Endpoints => u64::MAX,
    };
    let keep = |k: u64| k == 0 || k == steps || k % stride == 0;
    let capacity = if stride == u64::MAX { 2 } else { (steps / stride + 2) as usize };

    let mut rec = TrajectoryRecord {
        kind: config.kind,
        dt,
        steps,
        indices: Vec::with_capacity(capacity),
        times: Vec::with_capacity(capacity),
        y_states: None,
        i_states: Vec::with_capacity(capacity),
        truncated: Vec::with_capacity(capacity),
        pre_truncation: None,
        truncation_count: 0,
        boundary_saturated: false,
        domain_exit: false,
        final_y: None,
        final_i: params.i0,
    };
    let mut incs = increments.into_iter();
    let mut next_db = |k: u64| {
        incs.next()
            .ok_or_else(|| Error::Config(format!("increment stream ended at step {k} of {steps}")))
    };

    match config.kind {
        SchemeKind::ClassicalEm => {
            let mut i = params.i0;
            rec.indices.push(0);
            rec.times.push(T::zero());
            rec.i_states.push(i);
            rec.truncated.push(false);
            for k in 1..=steps {
                let s = step_classical_em(i, next_db(k)?, dt, params);
                i = s.i;
                rec.domain_exit |= s.domain_exit;
                if keep(k) {
                    rec.indices.push(k);
                    rec.times.push(T::of(k as f64) * dt);
                    rec.i_states.push(i);
                    rec.truncated.push(false);
                }
            }
            rec.final_i = i;
        }
        SchemeKind::LogEm | SchemeKind::LogTem => {
            let cap = config.cap(params)?;
            let mut y = transform::forward(params.i0, params)?;
            let mut ys = Vec::with_capacity(capacity);
            let mut pres = config.keep_pre_truncation.then(|| Vec::with_capacity(capacity));
            let mut record = |rec: &mut TrajectoryRecord<T>, k: u64, y: T, pre: T, truncated: bool| {
                let i = inverse_raw(y, n);
                rec.boundary_saturated |= !(i > T::zero() && i < n);
                rec.indices.push(k);
                rec.times.push(T::of(k as f64) * dt);
                rec.i_states.push(i);
                rec.truncated.push(truncated);
                ys.push(y);
                if let Some(p) = pres.as_mut() {
                    p.push(pre);
                }
            };
            record(&mut rec, 0, y.get(), y.get(), false);
            for k in 1..=steps {
                let db = next_db(k)?;
                let (next, pre, truncated) = if config.kind == SchemeKind::LogTem {
                    let s = step_log_tem(y, db, dt, params, cap);
                    (s.y, s.pre_truncation, s.truncated)
                } else {
                    let s = step_log_em(y, db, dt, params)?.get();
                    (s, s, false)
                };
                y = YState::new(next)?;
                if truncated {
                    rec.truncation_count += 1;
                }
                if keep(k) {
                    record(&mut rec, k, next, pre, truncated);
                } else {
                    let i = inverse_raw(next, n);
                    rec.boundary_saturated |= !(i > T::zero() && i < n);
                }
            }
            rec.final_y = Some(y.get());
            rec.final_i = inverse_raw(y.get(), n);
            rec.y_states = Some(ys);
            rec.pre_truncation = pres;
        }
    }
    Ok(rec)
}
