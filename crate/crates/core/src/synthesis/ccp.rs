use alloc::vec::Vec;

use super::bootstrap::{ccp_margin, initial_design, MULTIPLIER_FLOOR};
use super::certificate::{
    assemble_m, assemble_mi2, check_theorem1, sigma_star, CertificateVars, Mi2Operands,
    SynthesisContext, Theorem1Report, RHO_MIN,
};
use super::SynthesisSettings;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::sdp::{self, AffineMat, BlockKind, SdpProblem, SdpSolution, SolveStatus, VarId, VarSpace};

/// Handles of the decision blocks of a convex-concave subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcpVars {
    pub p: VarId,
    pub k: VarId,
    pub s1: VarId,
    pub s2: VarId,
    pub rho: VarId,
    pub c: VarId,
}

impl CcpVars {
    pub fn declare(ctx: &SynthesisContext) -> Result<(VarSpace, CcpVars)> {
        let (n, nu) = (ctx.n(), ctx.n_u());
        let mut s = VarSpace::new();
        let vars = CcpVars {
            p: s.add("P", BlockKind::Symmetric(n))?,
            k: s.add("K", BlockKind::Rect(nu, n))?,
            s1: s.add_bounded("S1", BlockKind::Diagonal(nu), Some(MULTIPLIER_FLOOR), None)?,
            s2: s.add_bounded("S2", BlockKind::Diagonal(nu), Some(MULTIPLIER_FLOOR), None)?,
            rho: s.add_bounded("rho", BlockKind::Scalar, Some(RHO_MIN), Some(1.0 - RHO_MIN))?,
            c: s.add("c", BlockKind::Scalar)?,
        };
        Ok((s, vars))
    }

    pub fn operands(&self, space: &VarSpace) -> Mi2Operands {
        Mi2Operands {
            p: space.var(self.p),
            k: space.var(self.k),
            s1: space.var(self.s1),
            s2: space.var(self.s2),
            rho: space.var(self.rho),
        }
    }

    /// Parameter vector holding `vars` and `c`.
    pub fn assignment(&self, space: &VarSpace, vars: &CertificateVars, c: f64) -> Result<Vec<f64>> {
        let mut x = alloc::vec![0.0; space.len()];
        space.set_value(self.p, &vars.p.to_matrix(), &mut x)?;
        space.set_value(self.k, &vars.k, &mut x)?;
        space.set_value(self.s1, &vars.s1_matrix(), &mut x)?;
        space.set_value(self.s2, &vars.s2_matrix(), &mut x)?;
        space.set_scalar(self.rho, vars.rho, &mut x)?;
        space.set_scalar(self.c, c, &mut x)?;
        Ok(x)
    }

    pub fn extract(&self, space: &VarSpace, x: &[f64]) -> Result<(CertificateVars, f64)> {
        let vars = CertificateVars {
            p: space.value_symmetric(self.p, x)?,
            k: space.value_matrix(self.k, x)?,
            s1: space.value_matrix(self.s1, x)?.diag_vec(),
            s2: space.value_matrix(self.s2, x)?.diag_vec(),
            rho: space.value_scalar(self.rho, x)?,
        };
        Ok((vars, space.value_scalar(self.c, x)?))
    }
}

/// `MI2 = L + He(XᵀY)` with `L` affine in `(P, S₁, S₂)`, `X` affine in
/// `(ϱ, K)` and `Y` affine in `(P, S₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CcpDecomposition {
    /// `N × N` with `N = 2(n_p+n_u) + n_u`.
    pub l: AffineMat,
    /// `(n_p + 2n_u) × N`.
    pub x: AffineMat,
    /// `(n_p + 2n_u) × N`.
    pub y: AffineMat,
}

pub fn ccp_decompose(ctx: &SynthesisContext, ops: &Mi2Operands) -> Result<CcpDecomposition> {
    let (n, nu) = (ctx.n(), ctx.n_u());
    let cl = ctx.closed_loop();
    let gamma = ctx.gamma_affine(&ops.p);
    let z = AffineMat::zeros;
    let l12 = z(n, nu);
    let l13 = gamma.lmul(&cl.g_cl.transpose());
    let l22 = -&(&ops.s1 + &ops.s2.scale(2.0));
    let l23 = gamma.lmul(&cl.j_cl.transpose());
    let l = AffineMat::from_blocks(&[
        &[&-&ops.p, &l12, &l13],
        &[&l12.transpose(), &l22, &l23],
        &[&l13.transpose(), &l23.transpose(), &-&gamma],
    ])?;
    let half_rho = ops.rho.times_matrix(&Matrix::identity(n))?.scale(0.5);
    let x = AffineMat::from_blocks(&[
        &[&half_rho, &z(n, nu), &z(n, n)],
        &[&ops.k, &z(nu, nu), &z(nu, n)],
    ])?;
    let y = AffineMat::from_blocks(&[
        &[&ops.p, &z(n, nu), &z(n, n)],
        &[&z(nu, n), &-&ops.s2, &l23],
    ])?;
    Ok(CcpDecomposition { l, x, y })
}

/// Concave part `Q = −XᵀX − YᵀY + He(XᵀY) = −(X−Y)ᵀ(X−Y)` at numeric `X, Y`.
pub fn concave_part(x: &Matrix, y: &Matrix) -> Matrix {
    let d = x - y;
    -&(&d.transpose() * &d)
}

/// First-order expansion `Q(η₀) + DQ(η₀)[η − η₀]` of the concave part, with
/// `DQ[Δ] = −He(X₀ᵀΔX) − He(Y₀ᵀΔY) + He(ΔXᵀY₀ + X₀ᵀΔY)`.
pub fn linearized_concave_part(x: &AffineMat, y: &AffineMat, x0: &Matrix, y0: &Matrix) -> AffineMat {
    let dx = x.add_constant(&-x0);
    let dy = y.add_constant(&-y0);
    let q0 = AffineMat::constant(concave_part(x0, y0));
    let xx = dx.lmul(&x0.transpose()).he();
    let yy = dy.lmul(&y0.transpose()).he();
    let cross = (&dx.transpose().rmul(y0) + &dy.lmul(&x0.transpose())).he();
    &(&(&q0 - &xx) - &yy) + &cross
}

/// The subproblem at `eta0`: maximize `c` subject to
/// `[[R + ηI, W], [Wᵀ, −I]] ⪯ 0` with `R = L + Q(η₀) + DQ(η₀)[η−η₀]`,
/// `W = [Xᵀ Yᵀ]`, the trace condition and `P ⪰ cI`.
pub fn linearized_subproblem(ctx: &SynthesisContext, eta0: &CertificateVars, margin: f64) -> Result<(SdpProblem, CcpVars)> {
    eta0.check_shapes(ctx)?;
    let (space, vars) = CcpVars::declare(ctx)?;
    let ops = vars.operands(&space);
    let dec = ccp_decompose(ctx, &ops)?;
    let dec0 = ccp_decompose(ctx, &Mi2Operands::constant(eta0))?;
    let x0 = dec0.x.value(&[])?;
    let y0 = dec0.y.value(&[])?;
    let r = &dec.l + &linearized_concave_part(&dec.x, &dec.y, &x0, &y0);
    let big_n = r.rows();
    let w = AffineMat::hstack(&[&dec.x.transpose(), &dec.y.transpose()])?;
    let m = w.cols();
    let block = AffineMat::from_blocks(&[
        &[&r.add_constant(&Matrix::identity(big_n).scale(margin)), &w],
        &[&w.transpose(), &AffineMat::constant(Matrix::identity(m).scale(-1.0))],
    ])?;
    let n = ctx.n();
    let cv = space.var(vars.c);
    let trace = &ctx.delta_weight_affine(&ops.s1) - &ops.rho;
    let mut prob = SdpProblem::new(space);
    prob.maximize(&cv)?;
    prob.add_nsd("linearized", &block, 0.0)?;
    prob.add_psd("P>=cI", &(&ops.p - &cv.times_matrix(&Matrix::identity(n))?), 0.0)?;
    prob.add_scalar_le("trace", &trace)?;
    Ok((prob, vars))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthesisStatus {
    /// Stopped by `|c_{k+1} − c_k| ≤ ε`.
    Converged,
    MaxIterations,
    /// A subproblem failed; the best iterate so far is returned.
    SolverFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub c: f64,
    /// `λ_max` of the three-block matrix at the iterate.
    pub mi2_lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub vars: CertificateVars,
    pub c: f64,
    pub sigma_star: f64,
    /// Number of iterates, the initial design included.
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub status: SynthesisStatus,
    /// Strictness margin of the subproblems.
    pub eta: f64,
    pub report: Theorem1Report,
}

/// Candidate acceptance: the three-block margin, the trace condition,
/// `P ≻ 0` and monotonicity of `c`.
fn accept(ctx: &SynthesisContext, cand: &CertificateVars, c: f64, c_prev: f64, eta: f64) -> Result<Option<f64>> {
    if cand.validate(ctx).is_err() {
        return Ok(None);
    }
    let lmax = linalg::lambda_max(&assemble_mi2(cand, ctx)?);
    let trace = ctx.delta_weight(&cand.s1) - cand.rho;
    let ok = lmax <= -0.5 * eta && trace <= 1e-12 && c >= c_prev - 1e-7 && c <= linalg::lambda_min(&cand.p) + 1e-6;
    Ok(ok.then_some(lmax))
}

fn subproblem_step(ctx: &SynthesisContext, cur: &CertificateVars, eta: f64, settings: &SynthesisSettings) -> Result<(SdpSolution, CertificateVars, f64)> {
    let (prob, vars) = linearized_subproblem(ctx, cur, eta)?;
    let sol = sdp::solve(&prob, &settings.sdp)?;
    let (cand, c) = vars.extract(prob.space(), &sol.x)?;
    Ok((sol, cand, c))
}

/// Initial design followed by convex-concave iterations until the objective
/// stalls (`|c_{k+1} − c_k| ≤ ε`) or `k_max` iterates exist.
pub fn run_algorithm1(ctx: &SynthesisContext, settings: &SynthesisSettings) -> Result<SynthesisResult> {
    if settings.k_max == 0 {
        return Err(Error::input("k_max must be at least 1"));
    }
    if !(settings.epsilon > 0.0) {
        return Err(Error::input("epsilon must be positive"));
    }
    let init = initial_design(ctx, settings)?;
    let eta = ccp_margin(&init.vars, ctx, settings.strict_margin)?;
    let mut cur = init.vars;
    let mut c_prev = linalg::lambda_min(&cur.p);
    let mut history = alloc::vec![IterationRecord {
        c: c_prev,
        mi2_lambda_max: linalg::lambda_max(&assemble_mi2(&cur, ctx)?),
    }];
    let mut best = (cur.clone(), c_prev);
    let mut status = SynthesisStatus::MaxIterations;

    while history.len() < settings.k_max {
        let (sol, cand, c) = subproblem_step(ctx, &cur, eta, settings)?;
        let accepted = if sol.status == SolveStatus::Infeasible { None } else { accept(ctx, &cand, c, c_prev, eta)? };
        let Some(lmax) = accepted else {
            status = SynthesisStatus::SolverFailure;
            break;
        };
        history.push(IterationRecord { c, mi2_lambda_max: lmax });
        if c > best.1 {
            best = (cand.clone(), c);
        }
        cur = cand;
        if (c - c_prev).abs() <= settings.epsilon {
            status = SynthesisStatus::Converged;
            break;
        }
        c_prev = c;
    }

    let (vars, c) = best;
    let report = check_theorem1(&vars, ctx, settings.theorem_margin)?;
    let m = assemble_m(&vars, ctx)?;
    if !(report.m_lambda_max < 0.0) {
        return Err(Error::Infeasible("final iterate does not certify stability".into()));
    }
    let sigma_star = sigma_star(&vars.p, &m, ctx.plant().period(), settings.sigma_safety, settings.sigma_cap)?;
    Ok(SynthesisResult { vars, c, sigma_star, iterations: history.len(), history, status, eta, report })
}
