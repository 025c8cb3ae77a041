//! Scenario documents.  JSON with a schema version; unknown keys are errors.

use serde::Deserialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub hbar: f64,
    pub hamiltonian: HamiltonianSpec,
    #[serde(default)]
    pub drive: Option<DriveSpec>,
    pub state: StateSpec,
    pub grid: GridConfig,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
}

fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::Phase]
}

/// Exactly one variant per document.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    /// `H = ½Kz·z` with a constant symmetric K.
    ConstantK(Vec<Vec<f64>>),
    /// `K = Rᵀ diag(ω, ω) R`; R defaults to the identity.
    NormalModes {
        omegas: Vec<f64>,
        #[serde(default)]
        r: Option<Vec<Vec<f64>>>,
    },
    Harmonic { omega: f64 },
    /// `S_t = exp(tX)` for X in sp(n).
    Exponential { x: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveSpec {
    /// Adds `ℓ·z` to the Hamiltonian; the displacement and phase paths follow.
    Linear { ell: Vec<f64> },
    /// Displacement and phase given at every grid sample.
    Sampled { z_t: Vec<Vec<f64>>, gamma_t: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Covariance {
        v: Vec<Vec<f64>>,
        #[serde(default)]
        mean: Option<Vec<f64>>,
    },
    /// Pure squeezed state with `G = [[X + YX⁻¹Y, YX⁻¹], [X⁻¹Y, X⁻¹]]`.
    Squeezed {
        x: Vec<Vec<f64>>,
        y: Vec<Vec<f64>>,
        #[serde(default)]
        mean: Option<Vec<f64>>,
    },
    /// Thermal occupations per mode.
    Thermal {
        nbar: Vec<f64>,
        #[serde(default)]
        mean: Option<Vec<f64>>,
    },
    /// Gibbs state of `Rᵀ diag(ω, ω) R` at inverse temperature β.
    Gibbs {
        omegas: Vec<f64>,
        beta: f64,
        #[serde(default)]
        r: Option<Vec<Vec<f64>>>,
    },
    /// Vacuum-width state, optionally displaced.
    Coherent {
        #[serde(default)]
        mean: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Phase,
    Cz,
    Validate,
    Oracle,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Quanta per mode; 60 for one mode and 25 for two by default.
    #[serde(default)]
    pub cutoff: Option<usize>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!("schema {} is not supported (expected {SCHEMA_VERSION})", self.schema)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(CliError::Config(format!("hbar = {} must be positive", self.hbar)));
        }
        if self.grid.steps < 2 {
            return Err(CliError::Config(format!("grid.steps = {} must be at least 2", self.grid.steps)));
        }
        if !(self.grid.t_max > 0.0 && self.grid.t_max.is_finite()) {
            return Err(CliError::Config(format!("grid.t_max = {} must be positive", self.grid.t_max)));
        }
        if self.outputs.is_empty() {
            return Err(CliError::Config("outputs must not be empty".into()));
        }
        Ok(())
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }
}
