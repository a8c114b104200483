use std::path::Path;

use qsdc_core::hybrid::{HybridState, Horizon};
use qsdc_core::sdp::SdpSettings;
use qsdc_core::synthesis::{default_rho_grid, SynthesisSettings, THEOREM_MARGIN};
use qsdc_core::{Matrix, PlantSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A complete problem description: plant, algorithm tuning and simulation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantConfig,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
}

/// Matrices are row-major flat arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub n_p: usize,
    pub n_u: usize,
    pub a_p: Vec<f64>,
    pub b_p: Vec<f64>,
    pub delta: Vec<f64>,
    #[serde(rename = "T")]
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub epsilon: f64,
    pub k_max: usize,
    pub rho_grid: Vec<f64>,
    pub strict_margin: f64,
    pub bootstrap_margin: f64,
    pub bootstrap_retries: usize,
    pub theorem_margin: f64,
    pub sigma_safety: f64,
    pub sigma_cap: Option<f64>,
    pub sdp: SdpConfig,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        let s = SynthesisSettings::default();
        AlgorithmConfig {
            epsilon: s.epsilon,
            k_max: s.k_max,
            rho_grid: default_rho_grid(),
            strict_margin: s.strict_margin,
            bootstrap_margin: s.bootstrap_margin,
            bootstrap_retries: s.bootstrap_retries,
            theorem_margin: THEOREM_MARGIN,
            sigma_safety: s.sigma_safety,
            sigma_cap: s.sigma_cap,
            sdp: SdpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdpConfig {
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub feasibility_tolerance: f64,
}

impl Default for SdpConfig {
    fn default() -> Self {
        let s = SdpSettings::default();
        SdpConfig {
            max_iterations: s.max_iterations,
            gap_tolerance: s.gap_tolerance,
            feasibility_tolerance: s.feasibility_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Initial `ξ = (x_p, χ)`; zero when absent.
    pub x0: Option<Vec<f64>>,
    pub tau0: f64,
    pub t_max: f64,
    pub j_max: Option<usize>,
    pub samples_per_period: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let h = Horizon::default();
        SimulationConfig { x0: None, tau0: 0.0, t_max: h.t_max, j_max: None, samples_per_period: h.samples_per_period }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.plant;
        let bad = |m: &str| Err(CliError::Parse(format!("config: {m}")));
        if p.n_p == 0 || p.n_u == 0 {
            return bad("n_p and n_u must be positive");
        }
        if p.a_p.len() != p.n_p * p.n_p {
            return bad("a_p must have n_p·n_p entries");
        }
        if p.b_p.len() != p.n_p * p.n_u {
            return bad("b_p must have n_p·n_u entries");
        }
        if p.delta.len() != p.n_u {
            return bad("delta must have n_u entries");
        }
        let a = &self.algorithm;
        let positive = [
            a.epsilon,
            a.strict_margin,
            a.bootstrap_margin,
            a.theorem_margin,
            a.sigma_safety,
            a.sdp.gap_tolerance,
            a.sdp.feasibility_tolerance,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return bad("epsilon, margins and tolerances must be positive");
        }
        if a.k_max == 0 || a.sdp.max_iterations == 0 || a.rho_grid.is_empty() {
            return bad("k_max, sdp.max_iterations and rho_grid must be nonempty");
        }
        let s = &self.simulation;
        if let Some(x0) = &s.x0 {
            if x0.len() != p.n_p + p.n_u {
                return bad("simulation.x0 must have n_p + n_u entries");
            }
        }
        if !(s.t_max > 0.0) || s.samples_per_period == 0 {
            return bad("simulation.t_max and samples_per_period must be positive");
        }
        Ok(())
    }

    pub fn plant_spec(&self) -> Result<PlantSpec, CliError> {
        let p = &self.plant;
        let a = Matrix::from_row_major(p.n_p, p.n_p, p.a_p.clone())?;
        let b = Matrix::from_row_major(p.n_p, p.n_u, p.b_p.clone())?;
        Ok(PlantSpec::new(a, b, p.delta.clone(), p.t)?)
    }

    pub fn synthesis_settings(&self) -> SynthesisSettings {
        let a = &self.algorithm;
        SynthesisSettings {
            rho_grid: a.rho_grid.clone(),
            epsilon: a.epsilon,
            k_max: a.k_max,
            strict_margin: a.strict_margin,
            bootstrap_margin: a.bootstrap_margin,
            bootstrap_retries: a.bootstrap_retries,
            theorem_margin: a.theorem_margin,
            sigma_safety: a.sigma_safety,
            sigma_cap: a.sigma_cap,
            sdp: SdpSettings {
                max_iterations: a.sdp.max_iterations,
                gap_tolerance: a.sdp.gap_tolerance,
                feasibility_tolerance: a.sdp.feasibility_tolerance,
                ..SdpSettings::default()
            },
        }
    }

    pub fn initial_state(&self) -> HybridState {
        let n = self.plant.n_p + self.plant.n_u;
        let xi = self.simulation.x0.clone().unwrap_or_else(|| vec![0.0; n]);
        HybridState::new(xi, self.simulation.tau0)
    }

    pub fn horizon(&self) -> Horizon {
        let s = &self.simulation;
        Horizon { t_max: s.t_max, j_max: s.j_max.unwrap_or(usize::MAX), samples_per_period: s.samples_per_period }
    }
}
