//! Stability certificates for a quantized sampled-data loop and the
//! convex-concave design procedure built on them.
//!
//! A gain `K` is certified by `(P, S₁, S₂, ϱ)` when `ΔᵀS₁Δ ≤ ϱ` and the
//! two-block matrix `M` of [`assemble_m`] is negative definite; equivalently
//! the three-block matrix of [`assemble_mi2`] is. Design starts from a
//! line-searched feasible point ([`initial_design`]) and then solves a
//! sequence of convex inner approximations ([`run_algorithm1`]).

mod bootstrap;
mod ccp;
mod certificate;

pub use bootstrap::{
    ccp_margin, choose_s2, default_rho_grid, find_multipliers, initial_design, multiplier_search,
    verify_gain, InitialDesign, MultiplierSearch, MULTIPLIER_FLOOR,
};
pub use ccp::{
    ccp_decompose, concave_part, linearized_concave_part, linearized_subproblem, run_algorithm1,
    CcpDecomposition, CcpVars, IterationRecord, SynthesisResult, SynthesisStatus,
};
pub use certificate::{
    assemble_m, assemble_mi2, check_theorem1, gamma_of, mi2_affine, sigma_bound, sigma_star,
    CertificateVars, Mi2Operands, SynthesisContext, Theorem1Report, RHO_MIN, THEOREM_MARGIN,
};

use alloc::vec::Vec;

use crate::sdp::SdpSettings;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisSettings {
    /// Candidate values of ϱ for the initial line search.
    pub rho_grid: Vec<f64>,
    /// Stop when successive objectives differ by at most this.
    pub epsilon: f64,
    /// Maximum number of iterates, the initial design included.
    pub k_max: usize,
    /// Relative strictness margin of the subproblems.
    pub strict_margin: f64,
    /// Initial margin of the line-search inequality.
    pub bootstrap_margin: f64,
    pub bootstrap_retries: usize,
    /// Negativity margin required by the final certificate check.
    pub theorem_margin: f64,
    pub sigma_safety: f64,
    /// Upper limit on σ*, `10/T` when `None`.
    pub sigma_cap: Option<f64>,
    pub sdp: SdpSettings,
}

impl Default for SynthesisSettings {
    fn default() -> Self {
        SynthesisSettings {
            rho_grid: default_rho_grid(),
            epsilon: 1e-4,
            k_max: 200,
            strict_margin: 1e-7,
            bootstrap_margin: 1e-5,
            bootstrap_retries: 3,
            theorem_margin: THEOREM_MARGIN,
            sigma_safety: 0.9,
            sigma_cap: None,
            sdp: SdpSettings::default(),
        }
    }
}
