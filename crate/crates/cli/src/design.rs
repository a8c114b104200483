use std::path::Path;

use qsdc_core::synthesis::{CertificateVars, SynthesisResult, SynthesisStatus};
use qsdc_core::{Matrix, SymmetricMatrix};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Controller design as written by `synthesize`. Only `K` is required when
/// reading; verification searches for whatever is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignFile {
    /// Rows of the gain.
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    /// Diagonal of `S₁`.
    #[serde(rename = "S1", default, skip_serializing_if = "Option::is_none")]
    pub s1: Option<Vec<f64>>,
    /// Diagonal of `S₂`.
    #[serde(rename = "S2", default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub c: f64,
    pub mi2_lambda_max: f64,
}

pub fn status_name(s: SynthesisStatus) -> &'static str {
    match s {
        SynthesisStatus::Converged => "converged",
        SynthesisStatus::MaxIterations => "max_iterations",
        SynthesisStatus::SolverFailure => "solver_failure",
    }
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn from_rows(name: &str, r: &[Vec<f64>]) -> Result<Matrix, CliError> {
    let cols = r.first().map_or(0, Vec::len);
    if r.is_empty() || cols == 0 || r.iter().any(|row| row.len() != cols) {
        return Err(CliError::Parse(format!("design: {name} must be a nonempty rectangular array of rows")));
    }
    Ok(Matrix::from_row_major(r.len(), cols, r.concat())?)
}

impl DesignFile {
    pub fn from_result(r: &SynthesisResult) -> Self {
        DesignFile {
            k: rows(&r.vars.k),
            p: Some(rows(&r.vars.p.to_matrix())),
            s1: Some(r.vars.s1.clone()),
            s2: Some(r.vars.s2.clone()),
            rho: Some(r.vars.rho),
            c: Some(r.c),
            sigma_star: Some(r.sigma_star),
            status: Some(status_name(r.status).to_string()),
            iterations: Some(r.iterations),
            eta: Some(r.eta),
            history: r.history.iter().map(|h| HistoryEntry { c: h.c, mi2_lambda_max: h.mi2_lambda_max }).collect(),
        }
    }

    /// A design holding a certificate but no synthesis metadata.
    pub fn from_vars(vars: &CertificateVars, sigma_star: Option<f64>) -> Self {
        DesignFile {
            k: rows(&vars.k),
            p: Some(rows(&vars.p.to_matrix())),
            s1: Some(vars.s1.clone()),
            s2: Some(vars.s2.clone()),
            rho: Some(vars.rho),
            c: None,
            sigma_star,
            status: None,
            iterations: None,
            eta: None,
            history: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("design: {e}")))
    }

    pub fn gain(&self) -> Result<Matrix, CliError> {
        from_rows("K", &self.k)
    }

    pub fn lyapunov_matrix(&self) -> Result<Option<SymmetricMatrix>, CliError> {
        match &self.p {
            None => Ok(None),
            Some(p) => {
                let m = from_rows("P", p)?;
                let tol = 1e-9 * (1.0 + m.max_abs());
                Ok(Some(SymmetricMatrix::from_matrix_checked(&m, tol)?))
            }
        }
    }

    /// The full certificate when every part of it is present.
    pub fn certificate(&self) -> Result<Option<CertificateVars>, CliError> {
        let p = self.lyapunov_matrix()?;
        match (p, &self.s1, &self.s2, self.rho) {
            (Some(p), Some(s1), Some(s2), Some(rho)) => Ok(Some(CertificateVars {
                p,
                k: self.gain()?,
                s1: s1.clone(),
                s2: s2.clone(),
                rho,
            })),
            _ => Ok(None),
        }
    }
}
