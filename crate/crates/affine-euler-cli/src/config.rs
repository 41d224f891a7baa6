//! Run configuration read from TOML. Unknown keys are rejected and every field is validated
//! before any computation starts.

use std::path::Path;

use affine_euler::perturb::SolverConfig;
use affine_euler::{GammaParams, Mat3};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Affine,
    Fields,
    PerturbRadial,
    #[serde(rename = "perturb-3d")]
    Perturb3d,
    Verify,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Affine => "affine",
            Kind::Fields => "fields",
            Kind::PerturbRadial => "perturb-radial",
            Kind::Perturb3d => "perturb-3d",
            Kind::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `y (1 - |y|^2)` times the amplitude, for both theta and V.
    Bubble,
    /// Rotational data with nonzero curl; Cartesian runs only.
    Swirl,
    /// Seeded random polynomial times `1 - |y|^2`.
    Random,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub gamma: f64,
    pub delta: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self { gamma: 5.0 / 3.0, delta: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AffineSection {
    /// Initial `A`, row-major.
    pub a0: [f64; 9],
    /// Initial `A_t`, row-major.
    pub a1: [f64; 9],
    /// Replace `a0`, `a1` by seeded anisotropic data.
    pub seeded: bool,
    pub t_end: f64,
    pub tol: f64,
}

const IDENTITY: [f64; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

impl Default for AffineSection {
    fn default() -> Self {
        Self { a0: IDENTITY, a1: IDENTITY, seeded: false, t_end: 1e3, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub radial_n: usize,
    pub cart_n: usize,
    /// Coarse residual grid; the fine grid doubles it.
    pub residual_n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { radial_n: 512, cart_n: 24, residual_n: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub profile: Profile,
    pub theta_amplitude: f64,
    pub v_amplitude: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self { profile: Profile::Bubble, theta_amplitude: 1e-3, v_amplitude: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldsSection {
    /// Physical time of the residual evaluation.
    pub t: f64,
}

impl Default for FieldsSection {
    fn default() -> Self {
        Self { t: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub energy_drift: f64,
    pub closed_form: f64,
    pub mu_over_t: f64,
    pub asymptotic_rate: f64,
    pub residual_order: f64,
    pub commutator_order: f64,
    pub identity: f64,
    pub key_lemma: f64,
    pub steady_state: f64,
    pub radial_rate: f64,
    pub cartesian_rate: f64,
    pub s_growth: f64,
    pub norm_spread: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy_drift: 1e-8,
            closed_form: 1e-8,
            mu_over_t: 0.01,
            asymptotic_rate: 0.05,
            residual_order: 1.8,
            commutator_order: 1.85,
            identity: 1e-12,
            key_lemma: 1e-6,
            steady_state: 1e-13,
            radial_rate: 0.15,
            cartesian_rate: 0.2,
            s_growth: 3.0,
            norm_spread: 50.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub kind: Option<Kind>,
    pub seed: u64,
    pub params: ParamsSection,
    pub affine: AffineSection,
    pub grid: GridSection,
    pub solver: SolverConfig,
    pub data: DataSection,
    pub fields: FieldsSection,
    pub tolerances: Tolerances,
    pub sweep: SweepSection,
}

fn matrix(m: &[f64; 9]) -> Mat3 {
    Mat3::from_row_slice(m)
}

pub fn is_isotropic(m: &Mat3) -> bool {
    (m - Mat3::identity() * m[(0, 0)]).amax() <= 1e-14 * m.amax().max(1.0)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn gamma_params(&self) -> Result<GammaParams, CliError> {
        GammaParams::new(self.params.gamma, self.params.delta)
            .map_err(|e| CliError::config(format!("params (gamma = {}, delta = {}): {e}", self.params.gamma, self.params.delta)))
    }

    /// Initial `(A, A_t)`, seeded when requested.
    pub fn initial_data(&self) -> (Mat3, Mat3) {
        if self.affine.seeded {
            affine_euler::asymptotics::anisotropic_data(self.seed)
        } else {
            (matrix(&self.affine.a0), matrix(&self.affine.a1))
        }
    }

    pub fn validate(&self, kind: Kind) -> Result<(), CliError> {
        self.gamma_params()?;
        let (a0, a1) = self.initial_data();
        if !(a0.iter().chain(a1.iter()).all(|x| x.is_finite())) {
            return Err(CliError::config("affine.a0 and affine.a1 must be finite"));
        }
        let det = a0.determinant();
        if !(det > 0.0) {
            return Err(CliError::config(format!("affine.a0 must have positive determinant, got {det}")));
        }
        if !(self.affine.t_end > 0.0 && self.affine.t_end.is_finite()) {
            return Err(CliError::config(format!("affine.t_end must be positive, got {}", self.affine.t_end)));
        }
        if !(self.affine.tol > 0.0) {
            return Err(CliError::config(format!("affine.tol must be positive, got {}", self.affine.tol)));
        }
        for (name, n, min) in [
            ("grid.radial_n", self.grid.radial_n, 8),
            ("grid.cart_n", self.grid.cart_n, 8),
            ("grid.residual_n", self.grid.residual_n, 8),
        ] {
            if n < min {
                return Err(CliError::config(format!("{name} must be at least {min}, got {n}")));
            }
        }
        self.solver.validate().map_err(|e| CliError::config(format!("solver: {e}")))?;
        if !(self.data.theta_amplitude.is_finite() && self.data.v_amplitude.is_finite()) {
            return Err(CliError::config("data amplitudes must be finite"));
        }
        if !(self.fields.t > 0.0) {
            return Err(CliError::config(format!("fields.t must be positive, got {}", self.fields.t)));
        }
        match kind {
            Kind::PerturbRadial => {
                if !(is_isotropic(&a0) && is_isotropic(&a1)) {
                    return Err(CliError::config(
                        "perturb-radial needs a conformal background: affine.a0 and affine.a1 must be multiples of the identity",
                    ));
                }
                if self.data.profile == Profile::Swirl {
                    return Err(CliError::config("data.profile = \"swirl\" is not radial"));
                }
            }
            Kind::Perturb3d | Kind::Affine | Kind::Fields | Kind::Verify => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        for k in [Kind::Affine, Kind::Fields, Kind::PerturbRadial, Kind::Perturb3d, Kind::Verify] {
            c.validate(k).unwrap();
        }
        assert_eq!(c.initial_data(), (Mat3::identity(), Mat3::identity()));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[params]\ngama = 1.4\n").is_err());
        assert!(RunConfig::from_toml("colour = 1\n").is_err());
        assert!(RunConfig::from_toml("[solver]\ncfll = 0.3\n").is_err());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let c = RunConfig::from_toml("kind = \"perturb-3d\"\n[params]\ngamma = 1.4\n[solver]\ntau_end = 2.0\n").unwrap();
        assert_eq!(c.kind, Some(Kind::Perturb3d));
        assert_eq!(c.params.delta, 1.0);
        assert_eq!(c.solver.tau_end, 2.0);
        assert_eq!(c.solver.cfl, SolverConfig::default().cfl);
    }

    #[test]
    fn invalid_values_name_the_invariant() {
        let c = RunConfig::from_toml("[params]\ndelta = -1.0\n").unwrap();
        let msg = c.validate(Kind::Affine).unwrap_err().to_string();
        assert!(msg.contains("delta"), "{msg}");
        let c = RunConfig::from_toml("[affine]\na0 = [1, 0, 0, 0, 1, 0, 0, 0, -1]\n").unwrap();
        assert!(c.validate(Kind::Affine).unwrap_err().to_string().contains("determinant"));
        let c = RunConfig::from_toml("[affine]\na1 = [1, 0.1, 0, 0, 1, 0, 0, 0, 1]\n").unwrap();
        assert!(c.validate(Kind::PerturbRadial).is_err());
        assert!(c.validate(Kind::Perturb3d).is_ok());
    }
}
