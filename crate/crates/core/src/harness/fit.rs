use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ordinary least-squares line through `(x, y)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SlopeFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Coefficient of determination; 1 when the ordinates are constant.
    pub r_squared: T,
}

/// Closed-form OLS fit. Needs at least two points with distinct abscissae.
pub fn fit_slope<T: Real>(points: &[(T, T)]) -> Result<SlopeFit<T>> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 points, got {}", points.len())));
    }
    let n = T::of(points.len() as f64);
    let (sx, sy) = points
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateFit("abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == T::zero() { T::one() } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit { slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_unit_slope() {
        let f = fit_slope::<f64>(&[(-6.0, -7.0), (-8.0, -9.0)]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-15);
        assert!((f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_errors_give_zero_slope() {
        let f = fit_slope(&[(-6.0, -3.0), (-7.0, -3.0), (-9.0, -3.0)]).unwrap();
        assert_eq!(f.slope, 0.0);
    }

    #[test]
    fn hand_computed_example() {
        // x̄ = −8, Sxx = 8, Sxy = 2·2.08333… + 2·2.11666… = 8.4 → slope 1.05
        let f = fit_slope::<f64>(&[(-6.0, -5.9), (-8.0, -7.95), (-10.0, -10.1)]).unwrap();
        assert!((f.slope - 1.05).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_slope(&[(1.0, 2.0)]), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_slope(&[(1.0, 2.0), (1.0, 3.0)]), Err(Error::DegenerateFit(_))));
    }
}
