//! Discrete calculus on the unit ball.

pub mod commutators;
pub mod grid;
pub mod lie;
pub mod stencil;

pub use grid::{CartGrid, RadialGrid, Side};
pub use lie::{FlowMapDiff, FlowMapError};

/// Floor on `|y|` below which angular operators are not evaluated.
pub const R_MIN: f64 = 1e-3;

/// Cutoff: 0 on `r <= 1/4`, 1 on `r >= 3/4`, quintic smoothstep in between.
pub fn psi(r: f64) -> f64 {
    let s = ((r - 0.25) / 0.5).clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

/// Derivative of [`psi`] with respect to `r`.
pub fn psi_r(r: f64) -> f64 {
    let s = (r - 0.25) / 0.5;
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    30.0 * s * s * (1.0 - s) * (1.0 - s) / 0.5
}
