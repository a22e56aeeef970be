//! Step-size penalty `h(Δ)` of the numerical extinction bound and the largest
//! step sizes for which the bound stays negative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive, Regime, SisParams};
use crate::scalar::Real;

/// Which version of the penalty to evaluate.
///
/// `AsPrinted` carries a middle term `6K³(μ+γ)³` with no step-size factor, so
/// it does not vanish as Δ → 0. `AsDerived` restores the `Δ^{1/2}` factor that
/// the underlying third-moment estimate produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HForm {
    #[serde(rename = "printed")]
    AsPrinted,
    #[default]
    #[serde(rename = "derived")]
    AsDerived,
}

impl HForm {
    pub fn as_str(self) -> &'static str {
        match self {
            HForm::AsPrinted => "printed",
            HForm::AsDerived => "derived",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "printed" => Some(HForm::AsPrinted),
            "derived" => Some(HForm::AsDerived),
            _ => None,
        }
    }
}

/// `h(Δ) = 6|η + ½σ²N²|³Δ² + 6K³(μ+γ)³[Δ^{1/2}] + 4|σN|³Δ^{1/2}`, the bracketed
/// factor present only in the derived form.
pub fn h_of_delta<T: Real>(params: &SisParams<T>, k: T, dt: T, form: HForm) -> T {
    let six = T::of(6.0);
    let drift = (params.eta() + T::half() * params.noise_variance()).abs();
    let cap_term = k * params.removal_rate();
    let noise = params.noise_scale().abs();
    let root = dt.sqrt();
    let middle = six * cap_term.powi(3);
    let middle = match form {
        HForm::AsPrinted => middle,
        HForm::AsDerived => middle * root,
    };
    six * drift.powi(3) * dt * dt + middle + T::of(4.0) * noise.powi(3) * root
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdKind {
    /// Small-noise regime: `h(Δ) = ½σ²N² + μ + γ − βN`.
    StarA,
    /// Large-noise regime: `h(Δ) = μ + γ − β²/(2σ²)`.
    StarB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub enum DeltaThreshold<T> {
    /// Unique root in `(0, 1)`.
    Root(T),
    /// `h` stays below the margin on all of `(0, 1)`.
    AllAdmissible,
}

/// Right-hand side of the threshold equation: the negative of the exact
/// extinction bound for the regime.
pub fn threshold_margin<T: Real>(params: &SisParams<T>, which: ThresholdKind) -> Result<T> {
    let d = derive(params)?;
    let (need, bound) = match which {
        ThresholdKind::StarA => (Regime::ExtinctSmallNoise, Some(d.ext_bound_a)),
        ThresholdKind::StarB => (Regime::ExtinctLargeNoise, d.ext_bound_b),
    };
    if d.regime != need {
        return Err(Error::Regime(format!("{which:?} requires {need}, parameters are {}", d.regime)));
    }
    bound
        .map(|b| -b)
        .ok_or_else(|| Error::Regime("bound undefined for zero noise".into()))
}

/// Solves `h(Δ) = margin` on `(0, 1)` by bisection on the derived form, which
/// increases strictly from `h(0⁺) = 0`. Returns `None` when the margin is not
/// positive.
pub fn delta_threshold<T: Real>(
    params: &SisParams<T>,
    k: T,
    which: ThresholdKind,
) -> Result<Option<DeltaThreshold<T>>> {
    let margin = threshold_margin(params, which)?;
    Ok(solve_h_equals(params, k, margin))
}

pub(crate) fn solve_h_equals<T: Real>(params: &SisParams<T>, k: T, margin: T) -> Option<DeltaThreshold<T>> {
    if !(margin > T::zero()) {
        return None;
    }
    let h = |dt: T| h_of_delta(params, k, dt, HForm::AsDerived);
    if h(T::one()) < margin {
        return Some(DeltaThreshold::AllAdmissible);
    }
    let tol = T::of(1e-10);
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..4096 {
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < margin {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol * hi {
            break;
        }
    }
    Some(DeltaThreshold::Root((lo + hi) * T::half()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;
    use crate::schemes::default_cap_multiplier;

    fn small() -> SisParams<f64> {
        SisParams::preset(Preset::SmallNoise, 1.0).unwrap()
    }

    #[test]
    fn derived_form_vanishes_at_zero_step() {
        let p = small();
        let k = default_cap_multiplier(&p).unwrap();
        assert!(h_of_delta(&p, k, 1e-30, HForm::AsDerived) < 1e-6);
        assert!(h_of_delta(&p, k, 1e-30, HForm::AsPrinted) > 1e6);
    }

    #[test]
    fn forms_agree_without_noise_or_removal() {
        let p = SisParams::new(0.03, 0.0, 0.0, 0.0, 100.0, 1.0).unwrap();
        for dt in [0.01, 0.3, 0.9] {
            let expect = 6.0 * 3.0_f64.powi(3) * dt * dt;
            for form in [HForm::AsPrinted, HForm::AsDerived] {
                assert!((h_of_delta(&p, 3.0, dt, form) - expect).abs() < 1e-12 * expect);
            }
        }
    }

    #[test]
    fn small_noise_value_at_small_step() {
        // K = 2(1 + 1/99) = 200/99; terms: 6·|5 + 6.125|³·1e-8, 6·(K·45)³·1e-2, 4·3.5³·1e-2
        let p = small();
        let k = default_cap_multiplier(&p).unwrap();
        assert!((k - 200.0 / 99.0).abs() < 1e-14);
        let expect = 6.0 * 11.125_f64.powi(3) * 1e-8
            + 6.0 * (200.0 / 99.0 * 45.0_f64).powi(3) * 1e-2
            + 4.0 * 42.875 * 1e-2;
        let h = h_of_delta(&p, k, 1e-4, HForm::AsDerived);
        assert!((h - expect).abs() < 1e-12 * expect, "{h} vs {expect}");
    }

    #[test]
    fn derived_form_strictly_increasing() {
        let p = small();
        let k = default_cap_multiplier(&p).unwrap();
        let mut prev = 0.0;
        for i in 1..1000 {
            let v = h_of_delta(&p, k, i as f64 / 1000.0, HForm::AsDerived);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn threshold_requires_matching_regime() {
        let p = small();
        let k = default_cap_multiplier(&p).unwrap();
        assert!(matches!(delta_threshold(&p, k, ThresholdKind::StarB), Err(Error::Regime(_))));
        let weak = SisParams::preset(Preset::WeakNoise, 1.0).unwrap();
        assert!(delta_threshold(&weak, k, ThresholdKind::StarA).is_err());
    }

    #[test]
    fn threshold_root_solves_equation() {
        let p = small();
        let k = default_cap_multiplier(&p).unwrap();
        let Some(DeltaThreshold::Root(r)) = delta_threshold(&p, k, ThresholdKind::StarA).unwrap() else {
            panic!("expected a root");
        };
        let h = h_of_delta(&p, k, r, HForm::AsDerived);
        assert!((h - 1.125).abs() < 1e-9, "h(root) = {h}");
    }

    #[test]
    fn non_positive_margin_and_clamped_cases() {
        let p = small();
        assert_eq!(solve_h_equals(&p, 2.0, 0.0), None);
        assert_eq!(solve_h_equals(&p, 2.0, -1.0), None);
        assert_eq!(solve_h_equals(&p, 2.0, 1e12), Some(DeltaThreshold::AllAdmissible));
    }
}
