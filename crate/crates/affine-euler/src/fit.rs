//! Least-squares fits of exponential decay rates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("value {value} at tau = {tau} is not positive")]
    NonPositive { tau: f64, value: f64 },
    #[error("fit window holds {0} points, need at least 2")]
    TooFewPoints(usize),
    #[error("series lengths differ")]
    LengthMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of log s against tau.
    pub rate: f64,
    /// exp(intercept).
    pub amplitude: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `log s = rate * tau + log amplitude` over the final half of the tau range.
pub fn decay_fit(tau: &[f64], s: &[f64]) -> Result<DecayFit, FitError> {
    if tau.len() != s.len() {
        return Err(FitError::LengthMismatch);
    }
    if tau.len() < 2 {
        return Err(FitError::TooFewPoints(tau.len()));
    }
    let (lo, hi) = (tau[0], tau[tau.len() - 1]);
    decay_fit_window(tau, s, 0.5 * (lo + hi), hi)
}

/// Same as [`decay_fit`] restricted to `lo <= tau <= hi`.
pub fn decay_fit_window(tau: &[f64], s: &[f64], lo: f64, hi: f64) -> Result<DecayFit, FitError> {
    if tau.len() != s.len() {
        return Err(FitError::LengthMismatch);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in tau.iter().zip(s) {
        if t < lo || t > hi {
            continue;
        }
        if !(v > 0.0) {
            return Err(FitError::NonPositive { tau: t, value: v });
        }
        xs.push(t);
        ys.push(v.ln());
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys)?;
    Ok(DecayFit { rate: slope, amplitude: intercept.exp(), r_squared: r2, points: xs.len() })
}

/// Ordinary least squares `y = slope x + intercept`; returns `(slope, intercept, R^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64), FitError> {
    let n = x.len();
    if n != y.len() {
        return Err(FitError::LengthMismatch);
    }
    if n < 2 {
        return Err(FitError::TooFewPoints(n));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::TooFewPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy <= 1e-300 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, intercept, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }

    #[test]
    fn exact_exponential() {
        let t = grid(0.0, 8.0, 200);
        let s: Vec<f64> = t.iter().map(|x| (-0.6 * x).exp()).collect();
        let f = decay_fit(&t, &s).unwrap();
        assert!((f.rate + 0.6).abs() < 1e-6);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polynomial_prefactor() {
        let t = grid(0.0, 8.0, 400);
        let s: Vec<f64> = t.iter().map(|x| (1.0 + x) * (-2.0 * x).exp()).collect();
        let f = decay_fit_window(&t, &s, 4.0, 8.0).unwrap();
        assert!(f.rate > -2.0 && f.rate < -1.8, "{}", f.rate);
    }

    #[test]
    fn constant_series() {
        let t = grid(0.0, 1.0, 10);
        let s = vec![3.0; t.len()];
        assert_eq!(decay_fit(&t, &s).unwrap().rate, 0.0);
    }

    #[test]
    fn rejects_nonpositive() {
        let t = grid(0.0, 1.0, 10);
        let mut s = vec![1.0; t.len()];
        s[9] = 0.0;
        assert!(matches!(decay_fit(&t, &s), Err(FitError::NonPositive { .. })));
    }
}
