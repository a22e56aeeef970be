//! CSV tables and JSON summaries written by the experiments.
//!
//! Floating-point fields use 17 significant digits so every value re-parses to
//! the same bit pattern.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::bounds::DeltaThreshold;
use crate::harness::convergence::ConvergenceReport;
use crate::harness::extinction::ExtinctionReport;
use crate::model::{derive, Regime, SisParams};
use crate::scalar::Real;
use crate::schemes::TrajectoryRecord;

pub const CONVERGENCE_HEADER: &str = "step_exponent,dt,error,log2_dt,log2_error";
pub const EXTINCTION_HEADER: &str = "path,exponent,log_final_i,final_i,below_threshold";
pub const TRAJECTORY_HEADER: &str = "t,y,I,truncated";

/// Formats with 17 significant digits.
pub fn fmt_real<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

pub fn write_convergence_csv<T: Real, W: Write>(report: &ConvergenceReport<T>, mut out: W) -> Result<()> {
    writeln!(out, "{CONVERGENCE_HEADER}")?;
    for (&l, &e) in report.step_exponents.iter().zip(&report.errors_p) {
        let dt = T::of((-(l as f64)).exp2());
        writeln!(
            out,
            "{l},{},{},{},{}",
            fmt_real(dt),
            fmt_real(e),
            fmt_real(-T::of(l as f64)),
            fmt_real(e.log2())
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_extinction_csv<T: Real, W: Write>(report: &ExtinctionReport<T>, mut out: W) -> Result<()> {
    writeln!(out, "{EXTINCTION_HEADER}")?;
    let ln_threshold = report.threshold.ln();
    for (j, (&e, &l)) in report.exponent_estimates.iter().zip(&report.final_log_infected).enumerate() {
        writeln!(
            out,
            "{j},{},{},{},{}",
            fmt_real(e),
            fmt_real(l),
            fmt_real(l.exp()),
            u8::from(l < ln_threshold)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// One row per recorded state. `y` is empty for the classical scheme.
pub fn write_trajectory_csv<T: Real, W: Write>(record: &TrajectoryRecord<T>, mut out: W) -> Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for (idx, (&t, &i)) in record.times.iter().zip(&record.i_states).enumerate() {
        let y = record.y_states.as_ref().map(|ys| fmt_real(ys[idx])).unwrap_or_default();
        writeln!(out, "{},{y},{},{}", fmt_real(t), fmt_real(i), u8::from(record.truncated[idx]))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Convergence,
    Extinction,
}

/// JSON summary shared by both studies. Fields that do not apply are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub study: StudyKind,
    pub scheme: String,
    pub regime: Regime,
    pub seed: u64,
    pub m_paths: usize,
    pub t_final: f64,
    pub params: SisParams<f64>,
    /// Fitted log-log slope; `null` when no fit was possible.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    pub p: Option<f64>,
    pub step_exponents: Vec<u32>,
    pub reference_exponent: Option<u32>,
    pub errors: Vec<f64>,
    /// Exact extinction bound plus `h(Δ)`.
    pub bound: Option<f64>,
    pub h: Option<f64>,
    pub h_form: Option<String>,
    pub dt: Option<f64>,
    pub cap_multiplier: Option<f64>,
    pub delta_star: Option<f64>,
    pub delta_star_all_admissible: Option<bool>,
    pub mean_exponent: Option<f64>,
    pub median_exponent: Option<f64>,
    pub fraction_below_threshold: Option<f64>,
    pub threshold: Option<f64>,
    pub runtime_seconds: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn params_f64<T: Real>(p: &SisParams<T>) -> SisParams<f64> {
    SisParams {
        beta: p.beta.as_f64(),
        mu: p.mu.as_f64(),
        gamma: p.gamma.as_f64(),
        sigma: p.sigma.as_f64(),
        cap_n: p.cap_n.as_f64(),
        i0: p.i0.as_f64(),
    }
}

impl Summary {
    pub fn from_convergence<T: Real>(
        report: &ConvergenceReport<T>,
        params: &SisParams<T>,
        runtime_seconds: f64,
    ) -> Result<Self> {
        Ok(Summary {
            study: StudyKind::Convergence,
            scheme: report.scheme_kind.as_str().to_string(),
            regime: derive(params)?.regime,
            seed: report.seed,
            m_paths: report.m_paths,
            t_final: report.t_final.as_f64(),
            params: params_f64(params),
            slope: finite(report.fitted_slope.as_f64()),
            intercept: finite(report.intercept.as_f64()),
            r_squared: finite(report.r_squared.as_f64()),
            p: Some(report.p.as_f64()),
            step_exponents: report.step_exponents.clone(),
            reference_exponent: Some(report.reference_exponent),
            errors: report.errors_p.iter().map(|e| e.as_f64()).collect(),
            bound: None,
            h: None,
            h_form: None,
            dt: None,
            cap_multiplier: None,
            delta_star: None,
            delta_star_all_admissible: None,
            mean_exponent: None,
            median_exponent: None,
            fraction_below_threshold: None,
            threshold: None,
            runtime_seconds,
        })
    }

    pub fn from_extinction<T: Real>(
        report: &ExtinctionReport<T>,
        params: &SisParams<T>,
        seed: u64,
        runtime_seconds: f64,
    ) -> Self {
        let (delta_star, all) = match report.delta_star {
            Some(DeltaThreshold::Root(r)) => (Some(r.as_f64()), Some(false)),
            Some(DeltaThreshold::AllAdmissible) => (None, Some(true)),
            None => (None, None),
        };
        Summary {
            study: StudyKind::Extinction,
            scheme: "logtem".to_string(),
            regime: report.regime,
            seed,
            m_paths: report.exponent_estimates.len(),
            t_final: report.horizon.as_f64(),
            params: params_f64(params),
            slope: None,
            intercept: None,
            r_squared: None,
            p: None,
            step_exponents: Vec::new(),
            reference_exponent: None,
            errors: Vec::new(),
            bound: report.theoretical_bound.map(|b| b.as_f64()),
            h: Some(report.h_value.as_f64()),
            h_form: Some(report.h_form.as_str().to_string()),
            dt: Some(report.dt.as_f64()),
            cap_multiplier: Some(report.cap_multiplier.as_f64()),
            delta_star,
            delta_star_all_admissible: all,
            mean_exponent: Some(report.mean_exponent.as_f64()),
            median_exponent: Some(report.median_exponent.as_f64()),
            fraction_below_threshold: Some(report.fraction_below_threshold.as_f64()),
            threshold: Some(report.threshold.as_f64()),
            runtime_seconds,
        }
    }

    /// Structural checks applied to every summary, including ones read back from disk.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("summary: {m}")));
        self.params.validate()?;
        if !(self.runtime_seconds >= 0.0) {
            return bad("runtime_seconds must be >= 0");
        }
        if self.m_paths == 0 {
            return bad("m_paths must be positive");
        }
        if crate::schemes::SchemeKind::parse(&self.scheme).is_none() {
            return bad("unknown scheme");
        }
        match self.study {
            StudyKind::Convergence => {
                if self.errors.is_empty() || self.errors.len() != self.step_exponents.len() {
                    return bad("one error per step exponent is required");
                }
                if self.errors.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                    return bad("errors must be finite and non-negative");
                }
                if self.p.is_none() || self.reference_exponent.is_none() {
                    return bad("p and reference_exponent are required");
                }
            }
            StudyKind::Extinction => {
                if self.h.is_none() || self.dt.is_none() || self.mean_exponent.is_none() {
                    return bad("h, dt and mean_exponent are required");
                }
                if let Some(f) = self.fraction_below_threshold {
                    if !(0.0..=1.0).contains(&f) {
                        return bad("fraction_below_threshold outside [0, 1]");
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let summary: Summary = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        summary.validate()?;
        Ok(summary)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for &x in &[0.1_f64, 1.0 / 3.0, -2.5e-300, 123456.789] {
            let s = fmt_real(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_real(1.0_f64), "1.0000000000000000e0");
    }
}
