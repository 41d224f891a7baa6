//! Affine motions of the compressible Euler system with a physical vacuum boundary, their
//! Lagrangian perturbations and the weighted energy functionals that control them.

pub mod affine;
pub mod asymptotics;
pub mod ball;
pub mod diagnostics;
pub mod eulerian;
pub mod exec;
pub mod fit;
pub mod frame;
pub mod ode;
pub mod params;
pub mod perturb;
pub mod quad;

pub use affine::{conformal_background, integrate_affine, AffineState, AffineTrajectory, Mat3};
pub use exec::Exec;
pub use frame::{derived_frame, DerivedFrame};
pub use params::GammaParams;
