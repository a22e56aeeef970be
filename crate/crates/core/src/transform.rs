//! Lamperti change of variables `y = log(I / (N − I))`.
//!
//! Under this map the infected equation becomes
//!
//! ```text
//! dy = F(y) dt + σN dB,
//! F(y) = η − (μ+γ) eʸ + σ²N²/2 − σ²N² / (1 + eʸ),
//! ```
//!
//! so the diffusion is constant and any finite `y` maps back into `(0, N)`.

use crate::error::{Error, Result};
use crate::model::SisParams;
use crate::scalar::{sigmoid, softplus, Real};

/// A state of the transformed equation. Always finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct YState<T>(T);

impl<T: Real> YState<T> {
    pub fn new(y: T) -> Result<Self> {
        if y.is_finite() {
            Ok(YState(y))
        } else {
            Err(Error::Numerical(format!("transformed state must be finite, got {y}")))
        }
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }
}

/// `y = log(i) − log(N − i)`.
pub fn forward<T: Real>(i: T, params: &SisParams<T>) -> Result<YState<T>> {
    let n = params.cap_n;
    if !(i > T::zero() && i < n) {
        return Err(Error::Domain { value: i.as_f64(), upper: n.as_f64() });
    }
    YState::new(i.ln() - (n - i).ln())
}

/// `I = N / (1 + e^{-y})`, evaluated on the branch that cannot overflow.
///
/// The result lies in `[0, N]`; the endpoints are only reached through
/// underflow or rounding, which [`is_saturated`] detects.
#[inline]
pub fn inverse<T: Real>(y: YState<T>, params: &SisParams<T>) -> T {
    inverse_raw(y.0, params.cap_n)
}

#[inline]
pub(crate) fn inverse_raw<T: Real>(y: T, n: T) -> T {
    n * sigmoid(y)
}

/// True when an I-space value has collapsed onto a domain endpoint.
#[inline]
pub fn is_saturated<T: Real>(i: T, params: &SisParams<T>) -> bool {
    !(i > T::zero() && i < params.cap_n)
}

/// `log I` computed from `y` directly: `log N + y − log(1 + eʸ)`.
///
/// Stays finite when `I` itself underflows to zero.
#[inline]
pub fn log_infected<T: Real>(y: YState<T>, params: &SisParams<T>) -> T {
    log_infected_raw(y.0, params.cap_n)
}

#[inline]
pub(crate) fn log_infected_raw<T: Real>(y: T, n: T) -> T {
    n.ln() + y - softplus(y)
}

/// Drift `F` of the transformed equation.
///
/// Fails with [`Error::Overflow`] when `(μ+γ)eʸ` is not representable, which
/// only happens for an uncapped scheme.
pub fn drift_f<T: Real>(y: YState<T>, params: &SisParams<T>) -> Result<T> {
    let f = drift_f_raw(y.0, params);
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::Overflow(format!("drift at y = {} is not representable", y.0)))
    }
}

/// Unchecked drift; may return `-∞` (or NaN when μ + γ = 0 and eʸ overflows).
#[inline]
pub(crate) fn drift_f_raw<T: Real>(y: T, params: &SisParams<T>) -> T {
    let s2n2 = params.noise_variance();
    // 1/(1+eʸ) = sigmoid(−y)
    params.eta() - params.removal_rate() * y.exp() + s2n2 * T::half() - s2n2 * sigmoid(-y)
}
