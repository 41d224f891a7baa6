//! Weighted norms, energies, dissipation and vorticity functionals of perturbations, and the
//! checks built on them.

pub mod curl;
pub mod hardy;
pub mod lemma;
pub mod norms;

use thiserror::Error;

use crate::ball::FlowMapError;

pub use curl::{CurlTransport, CurlTransportReport, CADENCE_FLAG};
pub use hardy::{hardy_and_embedding_check, HardyReport};
pub use lemma::{key_lemma_check, random_path, KeyLemmaReport, MatrixPath};
pub use norms::{
    eigen_term, energy_and_dissipation, norm_energy_interval, radial_report, s_norm, weighted_norm, Chart, EnergyGuard,
    NormEntry, NormReport,
};

/// Highest composite order supported on the grid.
pub const MAX_ORDER: usize = 2;

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooHigh(usize),
    #[error("radial fields are only reduced at order 0, got {0}")]
    RadialOrder(usize),
    #[error(transparent)]
    FlowMap(#[from] FlowMapError),
    #[error("field length {got} does not match grid size {expected}")]
    Length { got: usize, expected: usize },
    #[error("eigenvalues of Lambda cross along the path (gap {gap} at tau = {tau})")]
    EigenCrossing { tau: f64, gap: f64 },
    #[error("{0}")]
    Invalid(String),
}
