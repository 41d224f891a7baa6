use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("gamma must exceed 1 (got {0})")]
    GammaTooSmall(f64),
    #[error("delta must be positive (got {0})")]
    DeltaNotPositive(f64),
    #[error("stability runs require gamma <= 5/3 (got {0})")]
    GammaAboveStabilityRange(f64),
    #[error("non-finite parameter")]
    NonFinite,
}

/// Adiabatic exponent, its reciprocal offset alpha = 1/(gamma-1), and the strength delta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
}

impl GammaParams {
    pub fn new(gamma: f64, delta: f64) -> Result<Self, ParamError> {
        if !gamma.is_finite() || !delta.is_finite() {
            return Err(ParamError::NonFinite);
        }
        if gamma <= 1.0 {
            return Err(ParamError::GammaTooSmall(gamma));
        }
        if delta <= 0.0 {
            return Err(ParamError::DeltaNotPositive(delta));
        }
        Ok(Self { gamma, alpha: 1.0 / (gamma - 1.0), delta })
    }

    /// Same as [`GammaParams::new`] but also enforces the stability range gamma <= 5/3.
    pub fn for_stability(gamma: f64, delta: f64) -> Result<Self, ParamError> {
        let p = Self::new(gamma, delta)?;
        if gamma > 5.0 / 3.0 + 1e-14 {
            return Err(ParamError::GammaAboveStabilityRange(gamma));
        }
        Ok(p)
    }

    /// Enthalpy profile w(|y|^2) = delta/(2(1+alpha)) (1 - |y|^2), clipped at zero.
    #[inline]
    pub fn w_of_r2(&self, r2: f64) -> f64 {
        (self.w_scale() * (1.0 - r2)).max(0.0)
    }

    /// Prefactor delta/(2(1+alpha)) = delta(gamma-1)/(2 gamma).
    #[inline]
    pub fn w_scale(&self) -> f64 {
        self.delta / (2.0 * (1.0 + self.alpha))
    }

    /// (3 gamma - 3)/2, the ratio mu0/mu1.
    #[inline]
    pub fn mu0_factor(&self) -> f64 {
        (3.0 * self.gamma - 3.0) / 2.0
    }

    /// (5 - 3 gamma)/2, the dissipation prefactor.
    #[inline]
    pub fn dissipation_factor(&self) -> f64 {
        (5.0 - 3.0 * self.gamma) / 2.0
    }
}

impl Default for GammaParams {
    fn default() -> Self {
        Self::new(5.0 / 3.0, 1.0).expect("default parameters are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_consistency() {
        for &g in &[1.1, 1.4, 5.0 / 3.0, 2.0, 3.0] {
            let p = GammaParams::new(g, 1.0).unwrap();
            assert!((p.alpha * (p.gamma - 1.0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(GammaParams::new(1.0, 1.0), Err(ParamError::GammaTooSmall(1.0)));
        assert_eq!(GammaParams::new(1.4, -1.0), Err(ParamError::DeltaNotPositive(-1.0)));
        assert!(GammaParams::for_stability(2.0, 1.0).is_err());
        assert!(GammaParams::for_stability(5.0 / 3.0, 1.0).is_ok());
    }

    #[test]
    fn mu0_factor_is_one_at_five_thirds() {
        assert_eq!(GammaParams::default().mu0_factor(), 1.0);
        assert_eq!(GammaParams::default().dissipation_factor(), 0.0);
    }
}
