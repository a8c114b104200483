use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricMatrix};
use crate::math;
use crate::plant::{build_closed_loop, ClosedLoopMatrices, PlantSpec};
use crate::sdp::AffineMat;

/// Lower end of the admissible contraction rate, the upper end is `1 − RHO_MIN`.
pub const RHO_MIN: f64 = 1e-3;

/// Plant data together with the sampled closed-loop matrices shared by every
/// certificate computation.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisContext {
    plant: PlantSpec,
    cl: ClosedLoopMatrices,
    /// `exp(A_cl T)`.
    e: Matrix,
    /// `exp(−A_cl T)`.
    e_inv: Matrix,
}

impl SynthesisContext {
    pub fn new(plant: &PlantSpec) -> Result<Self> {
        let cl = build_closed_loop(plant);
        let t = plant.period();
        let e = linalg::expm(&cl.a_cl.scale(t))?;
        let e_inv = linalg::expm(&cl.a_cl.scale(-t))?;
        Ok(SynthesisContext { plant: plant.clone(), cl, e, e_inv })
    }

    pub fn plant(&self) -> &PlantSpec {
        &self.plant
    }

    pub fn closed_loop(&self) -> &ClosedLoopMatrices {
        &self.cl
    }

    /// `n_p + n_u`.
    pub fn n(&self) -> usize {
        self.plant.n()
    }

    pub fn n_u(&self) -> usize {
        self.plant.n_u()
    }

    pub fn flow_map(&self) -> &Matrix {
        &self.e
    }

    pub fn flow_map_inverse(&self) -> &Matrix {
        &self.e_inv
    }

    pub fn gamma(&self, p: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        p.congruence(&self.e)
    }

    /// `Γ` applied to an affine matrix.
    pub fn gamma_affine(&self, p: &AffineMat) -> AffineMat {
        p.lmul(&self.e.transpose()).rmul(&self.e)
    }

    /// `Θ(W) = exp(−A_cl T) W exp(−A_clᵀ T)` applied to an affine matrix.
    pub fn theta_affine(&self, w: &AffineMat) -> AffineMat {
        w.lmul(&self.e_inv).rmul(&self.e_inv.transpose())
    }

    /// `ΔᵀS₁Δ` for a diagonal `S₁` given by its diagonal.
    pub fn delta_weight(&self, s1: &[f64]) -> f64 {
        self.plant.delta().iter().zip(s1).map(|(d, s)| d * d * s).sum()
    }

    /// `ΔᵀS₁Δ` as a 1×1 affine expression of a diagonal affine `S₁`.
    pub fn delta_weight_affine(&self, s1: &AffineMat) -> AffineMat {
        let d = Matrix::column(self.plant.delta());
        s1.lmul(&d.transpose()).rmul(&d)
    }
}

/// `exp(A_clᵀT) P exp(A_cl T)`.
pub fn gamma_of(p: &SymmetricMatrix, a_cl: &Matrix, t: f64) -> Result<SymmetricMatrix> {
    if !a_cl.is_square() || a_cl.rows() != p.dim() {
        return Err(Error::dim("P and A_cl dimensions differ"));
    }
    p.congruence(&linalg::expm(&a_cl.scale(t))?)
}

/// Decision variables of the stability certificate. The multipliers are
/// diagonal and stored by their diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateVars {
    pub p: SymmetricMatrix,
    pub k: Matrix,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub rho: f64,
}

impl CertificateVars {
    pub fn s1_matrix(&self) -> Matrix {
        Matrix::diag(&self.s1)
    }

    pub fn s2_matrix(&self) -> Matrix {
        Matrix::diag(&self.s2)
    }

    pub fn check_shapes(&self, ctx: &SynthesisContext) -> Result<()> {
        let (n, nu) = (ctx.n(), ctx.n_u());
        if self.p.dim() != n || self.k.rows() != nu || self.k.cols() != n {
            return Err(Error::dim(format!("expected P {n}×{n} and K {nu}×{n}")));
        }
        if self.s1.len() != nu || self.s2.len() != nu {
            return Err(Error::dim("multiplier diagonals must have n_u entries"));
        }
        Ok(())
    }

    /// Shapes plus the domain conditions `P ≻ 0`, `S₁, S₂ ≻ 0`, `ϱ` admissible.
    pub fn validate(&self, ctx: &SynthesisContext) -> Result<()> {
        self.check_shapes(ctx)?;
        linalg::cholesky(&self.p)?;
        if self.s1.iter().chain(&self.s2).any(|s| !(*s > 0.0)) {
            return Err(Error::input("multipliers must be positive"));
        }
        if !(RHO_MIN..=1.0 - RHO_MIN).contains(&self.rho) {
            return Err(Error::input("rho outside [1e-3, 1 − 1e-3]"));
        }
        Ok(())
    }
}

/// Operands of the three-block inequality; any of them may be constant or
/// affine, but every product needs a constant factor.
#[derive(Debug, Clone)]
pub struct Mi2Operands {
    pub p: AffineMat,
    pub k: AffineMat,
    pub s1: AffineMat,
    pub s2: AffineMat,
    /// 1×1.
    pub rho: AffineMat,
}

impl Mi2Operands {
    pub fn constant(vars: &CertificateVars) -> Self {
        Mi2Operands {
            p: AffineMat::constant(vars.p.to_matrix()),
            k: AffineMat::constant(vars.k.clone()),
            s1: AffineMat::constant(vars.s1_matrix()),
            s2: AffineMat::constant(vars.s2_matrix()),
            rho: AffineMat::constant(Matrix::from_rows(&[[vars.rho]])),
        }
    }
}

fn scalar_times(s: &AffineMat, m: &AffineMat) -> Result<AffineMat> {
    if s.is_constant() {
        Ok(m.scale(s.constant_term()[(0, 0)]))
    } else if m.is_constant() {
        s.times_matrix(m.constant_term())
    } else {
        Err(Error::input("rho·P is bilinear when both are variables"))
    }
}

/// The three-block matrix
/// `[[(ϱ−1)P, −KᵀS₂, (G+JK)ᵀΓ], [⋆, −S₁−2S₂, JᵀΓ], [⋆, ⋆, −Γ]]`.
pub fn mi2_affine(ctx: &SynthesisContext, ops: &Mi2Operands) -> Result<AffineMat> {
    let cl = ctx.closed_loop();
    let gamma = ctx.gamma_affine(&ops.p);
    let g_jk = ops.k.lmul(&cl.j_cl).add_constant(&cl.g_cl);
    let b11 = &scalar_times(&ops.rho, &ops.p)? - &ops.p;
    let b12 = -&ops.k.transpose().mul(&ops.s2)?;
    let b13 = g_jk.transpose().mul(&gamma)?;
    let b22 = -&(&ops.s1 + &ops.s2.scale(2.0));
    let b23 = gamma.lmul(&cl.j_cl.transpose());
    let b33 = -&gamma;
    AffineMat::from_blocks(&[
        &[&b11, &b12, &b13],
        &[&b12.transpose(), &b22, &b23],
        &[&b13.transpose(), &b23.transpose(), &b33],
    ])
}

/// Numeric three-block matrix at `vars`.
pub fn assemble_mi2(vars: &CertificateVars, ctx: &SynthesisContext) -> Result<SymmetricMatrix> {
    vars.check_shapes(ctx)?;
    let m = mi2_affine(ctx, &Mi2Operands::constant(vars))?.value(&[])?;
    SymmetricMatrix::from_matrix_sym(&m)
}

/// The two-block matrix of the stability theorem:
/// `M₁₁ = (G+JK)ᵀΓ(G+JK) + (ϱ−1)P`, `M₁₂ = (G+JK)ᵀΓJ − KᵀS₂`,
/// `M₂₂ = JᵀΓJ − S₁ − 2S₂`.
pub fn assemble_m(vars: &CertificateVars, ctx: &SynthesisContext) -> Result<SymmetricMatrix> {
    vars.check_shapes(ctx)?;
    let cl = ctx.closed_loop();
    let gamma = ctx.gamma(&vars.p)?.to_matrix();
    let g_jk = &cl.g_cl + &(&cl.j_cl * &vars.k);
    let m11 = &(&(&g_jk.transpose() * &gamma) * &g_jk) + &vars.p.to_matrix().scale(vars.rho - 1.0);
    let m12 = &(&(&g_jk.transpose() * &gamma) * &cl.j_cl) - &(&vars.k.transpose() * &vars.s2_matrix());
    let m22 = &(&(&cl.j_cl.transpose() * &gamma) * &cl.j_cl)
        - &(&vars.s1_matrix() + &vars.s2_matrix().scale(2.0));
    let m = Matrix::from_blocks(&[&[&m11, &m12], &[&m12.transpose(), &m22]])?;
    SymmetricMatrix::from_matrix_sym(&m)
}

/// Outcome of evaluating both conditions of the stability theorem.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    /// `ΔᵀS₁Δ − ϱ`.
    pub trace_value: f64,
    pub trace_ok: bool,
    /// `λ_max(M)`.
    pub m_lambda_max: f64,
    pub m_ok: bool,
    /// `λ_max` of the three-block form, for reference.
    pub mi2_lambda_max: f64,
    pub p_lambda_min: f64,
}

impl Theorem1Report {
    pub fn passed(&self) -> bool {
        self.trace_ok && self.m_ok && self.p_lambda_min > 0.0
    }
}

/// Default negativity margin for [`check_theorem1`].
pub const THEOREM_MARGIN: f64 = 1e-8;

pub fn check_theorem1(vars: &CertificateVars, ctx: &SynthesisContext, margin: f64) -> Result<Theorem1Report> {
    let trace_value = ctx.delta_weight(&vars.s1) - vars.rho;
    let m = assemble_m(vars, ctx)?;
    let m_lambda_max = linalg::lambda_max(&m);
    let mi2_lambda_max = linalg::lambda_max(&assemble_mi2(vars, ctx)?);
    Ok(Theorem1Report {
        trace_value,
        trace_ok: trace_value <= 0.0,
        m_lambda_max,
        m_ok: m_lambda_max <= -margin,
        mi2_lambda_max,
        p_lambda_min: linalg::lambda_min(&vars.p),
    })
}

/// Unscaled flow-decay bound `−ln(1 − β/λ_max(P))/T` with `β = |λ_max(M)|`,
/// or `None` when `β ≥ λ_max(P)` and any rate works.
pub fn sigma_bound(p: &SymmetricMatrix, m: &SymmetricMatrix, t: f64) -> Result<Option<f64>> {
    let lm = linalg::lambda_max(m);
    if !(lm < 0.0) {
        return Err(Error::input("M is not negative definite"));
    }
    let beta = lm.abs();
    let pmax = linalg::lambda_max(p);
    if beta >= pmax {
        return Ok(None);
    }
    Ok(Some(-math::ln(1.0 - beta / pmax) / t))
}

/// Safety-scaled flow-decay rate, capped at `cap` (default `10/T`).
pub fn sigma_star(p: &SymmetricMatrix, m: &SymmetricMatrix, t: f64, safety: f64, cap: Option<f64>) -> Result<f64> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::input("safety factor must lie in (0, 1]"));
    }
    let cap = cap.unwrap_or(10.0 / t);
    Ok(match sigma_bound(p, m, t)? {
        Some(b) => (safety * b).min(cap),
        None => cap,
    })
}
