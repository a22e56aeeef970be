//! SIS model parameters, derived reproduction numbers and extinction regime.
//!
//! The infected count follows
//!
//! ```text
//! dI = (η I − β I²) dt + σ I (N − I) dB,    η = βN − μ − γ,
//! ```
//!
//! with `I(0) = I₀ ∈ (0, N)`. Every quantity here is a closed-form function of
//! the parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Biological and noise parameters of the stochastic SIS model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SisParams<T> {
    /// Transmission coefficient β, 1/(individual·day).
    pub beta: T,
    /// Per-capita death rate μ, 1/day.
    pub mu: T,
    /// Cure rate γ, 1/day.
    pub gamma: T,
    /// Noise intensity σ, 1/(individual·day^½).
    pub sigma: T,
    /// Total population N.
    pub cap_n: T,
    /// Initial infected count I₀.
    pub i0: T,
}

/// Parameter sets used throughout the experiments. All share β = 0.5, μ = 20,
/// γ = 25 and N = 100; they differ in the noise intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// σ = 0.035: R₀ˢ < 1 with σ² ≤ β/N.
    SmallNoise,
    /// σ = 0.08: σ² exceeds both β/N and β²/(2(μ+γ)).
    LargeNoise,
    /// σ = 0.01: neither extinction criterion applies.
    WeakNoise,
}

impl Preset {
    pub fn sigma(self) -> f64 {
        match self {
            Preset::SmallNoise => 0.035,
            Preset::LargeNoise => 0.08,
            Preset::WeakNoise => 0.01,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::SmallNoise => "small-noise",
            Preset::LargeNoise => "large-noise",
            Preset::WeakNoise => "weak-noise",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "small-noise" => Some(Preset::SmallNoise),
            "large-noise" => Some(Preset::LargeNoise),
            "weak-noise" => Some(Preset::WeakNoise),
            _ => None,
        }
    }
}

impl<T: Real> SisParams<T> {
    /// Builds and validates a parameter set.
    pub fn new(beta: T, mu: T, gamma: T, sigma: T, cap_n: T, i0: T) -> Result<Self> {
        let p = SisParams { beta, mu, gamma, sigma, cap_n, i0 };
        p.validate()?;
        Ok(p)
    }

    pub fn preset(preset: Preset, i0: T) -> Result<Self> {
        Self::new(
            T::of(0.5),
            T::of(20.0),
            T::of(25.0),
            T::of(preset.sigma()),
            T::of(100.0),
            i0,
        )
    }

    /// Checks the parameter invariants, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("beta", self.beta),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("sigma", self.sigma),
            ("n", self.cap_n),
            ("i0", self.i0),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in [("beta", self.beta), ("mu", self.mu), ("gamma", self.gamma)] {
            if v < T::zero() {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.cap_n <= T::zero() {
            return Err(Error::InvalidParams(format!("n must be > 0, got {}", self.cap_n)));
        }
        if !(self.i0 > T::zero() && self.i0 < self.cap_n) {
            return Err(Error::InvalidParams(format!(
                "i0 must lie strictly inside (0, n) = (0, {}), got {}",
                self.cap_n, self.i0
            )));
        }
        Ok(())
    }

    /// μ + γ, the total removal rate from the infected class.
    #[inline]
    pub fn removal_rate(&self) -> T {
        self.mu + self.gamma
    }

    /// η = βN − μ − γ.
    #[inline]
    pub fn eta(&self) -> T {
        self.beta * self.cap_n - self.mu - self.gamma
    }

    /// σN, the constant diffusion of the transformed equation.
    #[inline]
    pub fn noise_scale(&self) -> T {
        self.sigma * self.cap_n
    }

    /// σ²N².
    #[inline]
    pub fn noise_variance(&self) -> T {
        let s = self.noise_scale();
        s * s
    }

    /// Drift of the infected equation, `η I − β I²`.
    #[inline]
    pub fn drift_i(&self, i: T) -> T {
        self.eta() * i - self.beta * i * i
    }

    /// Diffusion of the infected equation, `σ I (N − I)`.
    #[inline]
    pub fn diffusion_i(&self, i: T) -> T {
        self.sigma * i * (self.cap_n - i)
    }

    /// `g(x) = βN − μ − γ − βx − ½σ²(N − x)²`, the per-step growth rate of
    /// `log I` bounded in the extinction analysis.
    pub fn growth_rate_bound(&self, x: T) -> T {
        let gap = self.cap_n - x;
        self.eta() - self.beta * x - T::half() * self.sigma * self.sigma * gap * gap
    }

    /// Maximiser `x̄ = (σ²N − β)/σ²` of [`growth_rate_bound`](Self::growth_rate_bound)
    /// over the real line. `None` when σ = 0.
    pub fn growth_rate_argmax(&self) -> Option<T> {
        let s2 = self.sigma * self.sigma;
        if s2 == T::zero() {
            None
        } else {
            Some((s2 * self.cap_n - self.beta) / s2)
        }
    }
}

/// Extinction regime implied by the closed-form criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// R₀ˢ < 1 and σ² ≤ β/N.
    ExtinctSmallNoise,
    /// σ² > max(β/N, β²/(2(μ+γ))).
    ExtinctLargeNoise,
    /// Neither criterion holds (or μ + γ = 0).
    Unclassified,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::ExtinctSmallNoise => "ExtinctSmallNoise",
            Regime::ExtinctLargeNoise => "ExtinctLargeNoise",
            Regime::Unclassified => "Unclassified",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scalars derived from [`SisParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DerivedQuantities<T> {
    pub eta: T,
    /// R₀ᴰ = βN/(μ+γ); absent when μ + γ = 0.
    pub r0_det: Option<T>,
    /// R₀ˢ = R₀ᴰ − σ²N²/(2(μ+γ)); absent when μ + γ = 0.
    pub r0_stoch: Option<T>,
    /// βN − μ − γ − ½σ²N².
    pub ext_bound_a: T,
    /// −μ − γ + β²/(2σ²); absent when σ = 0.
    pub ext_bound_b: Option<T>,
    pub regime: Regime,
}

/// Computes every derived scalar and classifies the regime.
///
/// The small-noise criterion is tested first, then the large-noise one. The two
/// are exclusive because one requires σ² ≤ β/N and the other σ² > β/N.
pub fn derive<T: Real>(params: &SisParams<T>) -> Result<DerivedQuantities<T>> {
    params.validate()?;
    let removal = params.removal_rate();
    let s2 = params.sigma * params.sigma;
    let noise_var = params.noise_variance();
    let beta_n = params.beta * params.cap_n;

    let (r0_det, r0_stoch) = if removal > T::zero() {
        let det = beta_n / removal;
        (Some(det), Some(det - noise_var / (T::two() * removal)))
    } else {
        (None, None)
    };

    let ext_bound_a = beta_n - removal - T::half() * noise_var;
    let ext_bound_b = if s2 > T::zero() {
        Some(-removal + params.beta * params.beta / (T::two() * s2))
    } else {
        None
    };

    let per_capita = params.beta / params.cap_n;
    let regime = match r0_stoch {
        None => Regime::Unclassified,
        Some(r0s) if r0s < T::one() && s2 <= per_capita => Regime::ExtinctSmallNoise,
        Some(_) if s2 > per_capita.max(params.beta * params.beta / (T::two() * removal)) => {
            Regime::ExtinctLargeNoise
        }
        Some(_) => Regime::Unclassified,
    };

    Ok(DerivedQuantities { eta: params.eta(), r0_det, r0_stoch, ext_bound_a, ext_bound_b, regime })
}

/// Negative-moment bound `K_p` for the infected count on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConstant<T> {
    /// Natural log of `K_p`, always finite for finite inputs.
    pub ln_value: T,
    /// `K_p` itself, or `+∞` when saturated.
    pub value: T,
    /// True when `K_p` exceeds the largest representable value.
    pub saturated: bool,
}

/// `K_p = (I₀^{-p} ∨ (N − I₀)^{-p}) · exp(pT(|βN − μ − γ| + 2βN) + p(p+1)σ²N²T/2)`,
/// accumulated in log space.
pub fn moment_constant_kp<T: Real>(
    params: &SisParams<T>,
    p: T,
    t_final: T,
) -> Result<MomentConstant<T>> {
    params.validate()?;
    if !(p >= T::zero()) || !p.is_finite() {
        return Err(Error::InvalidParams(format!("moment order p must be >= 0, got {p}")));
    }
    if !(t_final > T::zero()) || !t_final.is_finite() {
        return Err(Error::InvalidParams(format!("horizon must be > 0, got {t_final}")));
    }
    let nearest_boundary = params.i0.min(params.cap_n - params.i0);
    let ln_prefactor = -p * nearest_boundary.ln();
    let beta_n = params.beta * params.cap_n;
    let rate = (beta_n - params.removal_rate()).abs() + T::two() * beta_n;
    let ln_growth = p * t_final * rate + p * (p + T::one()) * params.noise_variance() * t_final / T::two();
    let ln_value = ln_prefactor + ln_growth;
    let saturated = ln_value > T::max_value().ln();
    let value = if saturated { T::infinity() } else { ln_value.exp() };
    Ok(MomentConstant { ln_value, value, saturated })
}
