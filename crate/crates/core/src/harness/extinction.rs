//! Finite-horizon extinction diagnostics for the truncated scheme.
//!
//! The almost-sure growth rate `limsup (1/t) log I` is not observable in a
//! finite run; each path instead reports the proxy `(log I_T − log I₀)/T`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::bounds::{h_of_delta, solve_h_equals, DeltaThreshold, HForm};
use crate::model::{derive, Regime, SisParams};
use crate::paths::IncrementStream;
use crate::scalar::Real;
use crate::schemes::{run_with_increments, Recording, SchemeConfig, SchemeKind, StepSize};
use crate::transform::log_infected_raw;

/// Default extinction threshold, in individuals.
pub const DEFAULT_EXTINCTION_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionConfig<T> {
    pub params: SisParams<T>,
    pub step: StepSize<T>,
    pub horizon: T,
    pub m_paths: usize,
    /// Paths ending below this infected count count as extinct.
    pub threshold: T,
    pub seed: u64,
    pub cap_multiplier: Option<T>,
    pub h_form: HForm,
}

impl<T: Real> ExtinctionConfig<T> {
    /// `Δ = 10⁻²`, `T = 50`, `M = 100`, threshold `10⁻³`.
    pub fn desk(params: SisParams<T>, seed: u64) -> Self {
        ExtinctionConfig {
            params,
            step: StepSize::Explicit(T::of(1e-2)),
            horizon: T::of(50.0),
            m_paths: 100,
            threshold: T::of(DEFAULT_EXTINCTION_THRESHOLD),
            seed,
            cap_multiplier: None,
            h_form: HForm::AsDerived,
        }
    }

    fn scheme_config(&self) -> SchemeConfig<T> {
        let mut c = SchemeConfig::new(SchemeKind::LogTem, self.step, self.horizon)
            .with_recording(Recording::Endpoints);
        c.cap_multiplier = self.cap_multiplier;
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_paths == 0 {
            return Err(Error::Config("at least one path is required".into()));
        }
        if !(self.threshold > T::zero()) {
            return Err(Error::Config(format!("threshold must be positive, got {}", self.threshold)));
        }
        self.scheme_config().validate(&self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExtinctionReport<T> {
    pub regime: Regime,
    pub dt: T,
    pub horizon: T,
    pub cap_multiplier: T,
    pub threshold: T,
    /// Per-path finite-horizon exponent proxy, in path order.
    pub exponent_estimates: Vec<T>,
    /// `log I_T` per path.
    pub final_log_infected: Vec<T>,
    pub mean_exponent: T,
    pub median_exponent: T,
    pub fraction_below_threshold: T,
    pub h_form: HForm,
    pub h_value: T,
    /// Exact extinction bound for the regime plus `h(Δ)`; absent when unclassified.
    pub theoretical_bound: Option<T>,
    /// Largest admissible step for the regime's bound, when one exists.
    pub delta_star: Option<DeltaThreshold<T>>,
}

pub fn extinction_study<T: Real>(config: &ExtinctionConfig<T>) -> Result<ExtinctionReport<T>> {
    config.validate()?;
    let params = &config.params;
    let scheme = config.scheme_config();
    let dt = scheme.dt();
    let steps = scheme.steps();
    let k = scheme.cap_multiplier_for(params)?;
    let horizon = T::of(steps as f64) * dt;
    let log_i0 = params.i0.ln();

    let final_log_infected: Vec<T> = (0..config.m_paths as u64)
        .into_par_iter()
        .map(|j| {
            let incs = match config.step {
                StepSize::Dyadic(l) => IncrementStream::dyadic(config.seed, j, l, l, config.horizon)?,
                StepSize::Explicit(dt) => IncrementStream::explicit(config.seed, j, dt, steps)?,
            };
            let rec = run_with_increments(params, &scheme, incs)?;
            let y = rec.final_y.expect("logarithmic scheme records y");
            Ok(log_infected_raw(y, params.cap_n))
        })
        .collect::<Result<_>>()?;

    let exponent_estimates: Vec<T> = final_log_infected
        .iter()
        .map(|&l| if steps == 0 { T::zero() } else { (l - log_i0) / horizon })
        .collect();
    let m = T::of(config.m_paths as f64);
    let mean_exponent = exponent_estimates.iter().fold(T::zero(), |a, &e| a + e) / m;
    let median_exponent = median(&exponent_estimates);
    let ln_threshold = config.threshold.ln();
    let below = final_log_infected.iter().filter(|&&l| l < ln_threshold).count();
    let fraction_below_threshold = T::of(below as f64) / m;

    let derived = derive(params)?;
    let h_value = h_of_delta(params, k, dt, config.h_form);
    let exact_bound = match derived.regime {
        Regime::ExtinctSmallNoise => Some(derived.ext_bound_a),
        Regime::ExtinctLargeNoise => derived.ext_bound_b,
        Regime::Unclassified => None,
    };
    let theoretical_bound = exact_bound.map(|b| b + h_value);
    let delta_star = exact_bound.and_then(|b| solve_h_equals(params, k, -b));

    Ok(ExtinctionReport {
        regime: derived.regime,
        dt,
        horizon,
        cap_multiplier: k,
        threshold: config.threshold,
        exponent_estimates,
        final_log_infected,
        mean_exponent,
        median_exponent,
        fraction_below_threshold,
        h_form: config.h_form,
        h_value,
        theoretical_bound,
        delta_star,
    })
}

fn median<T: Real>(values: &[T]) -> T {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n == 0 {
        T::nan()
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * T::half()
    }
}
