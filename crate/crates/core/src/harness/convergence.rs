//! Strong-error study with common random numbers.
//!
//! Every path draws one Brownian grid at the reference level. The reference
//! trajectory runs on that grid directly and each coarse trajectory runs on
//! the same grid coarsened, so the per-path error is a pathwise difference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::fit::fit_slope;
use crate::model::SisParams;
use crate::paths::BrownianGrid;
use crate::scalar::Real;
use crate::schemes::{run_trajectory, Recording, SchemeConfig, SchemeKind, StepSize};

/// Inputs of a strong-error study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig<T> {
    pub params: SisParams<T>,
    pub scheme: SchemeKind,
    pub step_exponents: Vec<u32>,
    pub reference_exponent: u32,
    /// Moment order of the error.
    pub p: T,
    pub m_paths: usize,
    pub t_final: T,
    pub seed: u64,
    /// Cap multiplier for the truncated scheme; default `2(1 + e^{Y₀})`.
    pub cap_multiplier: Option<T>,
}

impl<T: Real> ConvergenceConfig<T> {
    /// Laptop-sized run: `ℓ ∈ {6..12}`, reference `2^{-15}`, `p = 5`, `M = 200`, `T = 1`.
    pub fn desk(params: SisParams<T>, scheme: SchemeKind, seed: u64) -> Self {
        ConvergenceConfig {
            params,
            scheme,
            step_exponents: (6..=12).collect(),
            reference_exponent: 15,
            p: T::of(5.0),
            m_paths: 200,
            t_final: T::one(),
            seed,
            cap_multiplier: None,
        }
    }

    /// Full-size run: `ℓ ∈ {9..16}`, reference `2^{-19}`, `p = 5`, `M = 1000`, `T = 2`.
    pub fn paper_scale(params: SisParams<T>, scheme: SchemeKind, seed: u64) -> Self {
        ConvergenceConfig {
            step_exponents: (9..=16).collect(),
            reference_exponent: 19,
            m_paths: 1000,
            t_final: T::two(),
            ..Self::desk(params, scheme, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.step_exponents.is_empty() {
            return Err(Error::Config("at least one step exponent is required".into()));
        }
        if let Some(&max) = self.step_exponents.iter().max() {
            if max >= self.reference_exponent {
                return Err(Error::Config(format!(
                    "reference exponent {} must exceed every step exponent (max {max})",
                    self.reference_exponent
                )));
            }
        }
        if !(self.p > T::zero()) || !self.p.is_finite() {
            return Err(Error::Config(format!("moment order must be positive, got {}", self.p)));
        }
        if self.m_paths == 0 {
            return Err(Error::Config("at least one path is required".into()));
        }
        let horizon = self.t_final.as_f64();
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.t_final)));
        }
        for &l in &self.step_exponents {
            let steps = horizon * (l as f64).exp2();
            if steps.fract() != 0.0 {
                return Err(Error::Config(format!(
                    "horizon {} is not a whole number of steps 2^-{l}",
                    self.t_final
                )));
            }
        }
        Ok(())
    }

    fn scheme_config(&self, exponent: u32) -> SchemeConfig<T> {
        let mut c = SchemeConfig::new(self.scheme, StepSize::Dyadic(exponent), self.t_final)
            .with_recording(Recording::Full);
        c.cap_multiplier = self.cap_multiplier;
        c
    }
}

/// Outcome of [`strong_error_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConvergenceReport<T> {
    pub scheme_kind: SchemeKind,
    pub step_exponents: Vec<u32>,
    /// `Error(p)` for each step exponent.
    pub errors_p: Vec<T>,
    pub p: T,
    pub m_paths: usize,
    pub t_final: T,
    pub reference_exponent: u32,
    pub seed: u64,
    /// OLS slope of `log₂ Error` against `log₂ Δ`; NaN when no fit is possible.
    pub fitted_slope: T,
    pub intercept: T,
    pub r_squared: T,
}

/// Per-path statistic `sup_k |I_ref(t_k) − I_k|` over the coarse grid, one
/// entry per step exponent. `exponents` may include the reference level.
pub fn path_sup_errors<T: Real>(
    config: &ConvergenceConfig<T>,
    exponents: &[u32],
    path_index: u64,
) -> Result<Vec<T>> {
    let grid = BrownianGrid::generate(
        config.seed,
        path_index,
        config.reference_exponent,
        config.t_final,
    )?;
    let reference = run_trajectory(&config.params, &config.scheme_config(config.reference_exponent), &grid)?;
    exponents
        .iter()
        .map(|&l| {
            if l > config.reference_exponent {
                return Err(Error::Exponent { coarse: l, fine: config.reference_exponent });
            }
            let coarse = run_trajectory(&config.params, &config.scheme_config(l), &grid)?;
            let stride = 1usize << (config.reference_exponent - l);
            let sup = coarse
                .i_states
                .iter()
                .enumerate()
                .map(|(k, &approx)| (reference.i_states[k * stride] - approx).abs())
                .fold(T::zero(), |acc, d| if d.is_nan() || acc.is_nan() { T::nan() } else { acc.max(d) });
            Ok(sup)
        })
        .collect()
}

/// Runs the study. Paths are processed in parallel on the current rayon pool;
/// the result does not depend on the number of threads.
pub fn strong_error_study<T: Real>(config: &ConvergenceConfig<T>) -> Result<ConvergenceReport<T>> {
    config.validate()?;
    let per_path: Vec<Vec<T>> = (0..config.m_paths as u64)
        .into_par_iter()
        .map(|j| path_sup_errors(config, &config.step_exponents, j))
        .collect::<Result<_>>()?;

    let m = T::of(config.m_paths as f64);
    let errors_p: Vec<T> = (0..config.step_exponents.len())
        .map(|col| {
            let total = per_path
                .iter()
                .fold(T::zero(), |acc, row| acc + row[col].powf(config.p));
            (total / m).powf(config.p.recip())
        })
        .collect();

    let points: Vec<(T, T)> = config
        .step_exponents
        .iter()
        .zip(&errors_p)
        .map(|(&l, &e)| (-T::of(l as f64), e.log2()))
        .collect();
    let usable = points.iter().all(|&(_, y)| y.is_finite());
    let (fitted_slope, intercept, r_squared) = match fit_slope(&points) {
        Ok(f) if usable => (f.slope, f.intercept, f.r_squared),
        _ => (T::nan(), T::nan(), T::nan()),
    };

    Ok(ConvergenceReport {
        scheme_kind: config.scheme,
        step_exponents: config.step_exponents.clone(),
        errors_p,
        p: config.p,
        m_paths: config.m_paths,
        t_final: config.t_final,
        reference_exponent: config.reference_exponent,
        seed: config.seed,
        fitted_slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;
    use crate::schemes::step_log_em;
    use crate::transform::{forward, inverse};

    fn small() -> SisParams<f64> {
        SisParams::preset(Preset::SmallNoise, 1.0).unwrap()
    }

    #[test]
    fn self_comparison_is_exactly_zero() {
        let cfg = ConvergenceConfig {
            step_exponents: vec![4],
            reference_exponent: 6,
            m_paths: 3,
            ..ConvergenceConfig::desk(small(), SchemeKind::LogTem, 1)
        };
        for j in 0..3 {
            let e = path_sup_errors(&cfg, &[6], j).unwrap();
            assert_eq!(e, vec![0.0]);
        }
    }

    #[test]
    fn one_step_against_two_steps_by_hand() {
        // Δ = 1 is outside the truncated scheme's range, so compare log-EM steps.
        let p = small();
        let cfg = ConvergenceConfig {
            scheme: SchemeKind::LogEm,
            step_exponents: vec![0],
            reference_exponent: 1,
            p: 1.0,
            m_paths: 1,
            t_final: 1.0,
            ..ConvergenceConfig::desk(p, SchemeKind::LogEm, 77)
        };
        let report = strong_error_study(&cfg).unwrap();

        let grid = BrownianGrid::<f64>::generate(77, 0, 1, 1.0).unwrap();
        let (a, b) = (grid.increments[0], grid.increments[1]);
        let y0 = forward(1.0, &p).unwrap();
        let fine = step_log_em(step_log_em(y0, a, 0.5, &p).unwrap(), b, 0.5, &p).unwrap();
        let coarse = step_log_em(y0, a + b, 1.0, &p).unwrap();
        let expect = (inverse(fine, &p) - inverse(coarse, &p)).abs();
        assert!(expect > 0.0);
        assert!((report.errors_p[0] - expect).abs() <= 1e-12 * expect);
        assert!(report.fitted_slope.is_nan());
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = ConvergenceConfig::desk(small(), SchemeKind::LogTem, 1);
        let bad = ConvergenceConfig { reference_exponent: 12, ..base.clone() };
        assert!(matches!(strong_error_study(&bad), Err(Error::Config(_))));
        let bad = ConvergenceConfig { p: 0.0, ..base.clone() };
        assert!(strong_error_study(&bad).is_err());
        let bad = ConvergenceConfig { t_final: 1.3, ..base.clone() };
        assert!(strong_error_study(&bad).is_err());
        let bad = ConvergenceConfig { step_exponents: vec![], ..base };
        assert!(strong_error_study(&bad).is_err());
    }

    #[test]
    fn errors_shrink_with_refinement() {
        let cfg = ConvergenceConfig {
            step_exponents: vec![5, 8],
            reference_exponent: 11,
            m_paths: 40,
            ..ConvergenceConfig::desk(small(), SchemeKind::LogTem, 5)
        };
        let r = strong_error_study(&cfg).unwrap();
        assert!(r.errors_p.iter().all(|&e| e > 0.0));
        assert!(r.errors_p[0] / r.errors_p[1] >= 2.0, "{:?}", r.errors_p);
    }
}
