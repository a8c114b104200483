use alloc::format;
use alloc::vec::Vec;

use super::certificate::{
    assemble_mi2, mi2_affine, CertificateVars, Mi2Operands, SynthesisContext, RHO_MIN,
};
use super::SynthesisSettings;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricMatrix};
use crate::plant::check_stabilizable;
use crate::sdp::{self, AffineMat, BlockKind, SdpProblem, SolveStatus, VarSpace};

/// Lower bound on multiplier entries and on `W`.
pub const MULTIPLIER_FLOOR: f64 = 1e-8;

/// Default ϱ grid `{0.05, 0.10, …, 0.95}`.
pub fn default_rho_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 * 0.05).collect()
}

/// Strictness margin `1e-7·(1 + ‖MI2(P, K, S₁, 0, ϱ)‖₂)` used by the
/// convex-concave iterations.
pub fn ccp_margin(vars: &CertificateVars, ctx: &SynthesisContext, scale: f64) -> Result<f64> {
    let mut base = vars.clone();
    base.s2 = alloc::vec![0.0; base.s2.len()];
    let m = assemble_mi2(&base, ctx)?;
    let e = linalg::sym_eig(&m).values;
    let norm = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(scale * (1.0 + norm))
}

/// Result of the ϱ line search.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDesign {
    pub vars: CertificateVars,
    /// Optimal `l` at the selected ϱ.
    pub level: f64,
    /// Margin used in the line-search inequality.
    pub bootstrap_margin: f64,
    /// `−λ_max` of the three-block matrix at `vars`.
    pub margin: f64,
}

struct LineSearchPoint {
    rho: f64,
    level: f64,
    w: SymmetricMatrix,
    y: Matrix,
    s1: Vec<f64>,
}

fn line_search_point(ctx: &SynthesisContext, rho: f64, margin: f64, settings: &SynthesisSettings) -> Result<Option<LineSearchPoint>> {
    let (n, nu) = (ctx.n(), ctx.n_u());
    let cl = ctx.closed_loop();
    let mut space = VarSpace::new();
    let w = space.add("W", BlockKind::Symmetric(n))?;
    let y = space.add("Y", BlockKind::Rect(nu, n))?;
    let s1 = space.add_bounded("S1", BlockKind::Diagonal(nu), Some(MULTIPLIER_FLOOR), None)?;
    let l = space.add("l", BlockKind::Scalar)?;
    let (wv, yv, s1v, lv) = (space.var(w), space.var(y), space.var(s1), space.var(l));

    let b13 = &wv.rmul(&cl.g_cl.transpose()) + &yv.transpose().rmul(&cl.j_cl.transpose());
    let j = AffineMat::constant(cl.j_cl.clone());
    let m0 = AffineMat::from_blocks(&[
        &[&wv.scale(rho - 1.0), &AffineMat::zeros(n, nu), &b13],
        &[&AffineMat::zeros(nu, n), &-&s1v, &j.transpose()],
        &[&b13.transpose(), &j, &-&ctx.theta_affine(&wv)],
    ])?;
    let eye = Matrix::identity(n);
    let mut prob = SdpProblem::new(space);
    prob.minimize(&lv)?;
    prob.add_nsd("M0", &m0, margin)?;
    prob.add_nsd("level", &(&wv - &lv.times_matrix(&eye)?), 0.0)?;
    prob.add_psd("W>0", &wv, MULTIPLIER_FLOOR)?;
    let rho_c = AffineMat::constant(Matrix::from_rows(&[[rho]]));
    prob.add_scalar_le("trace", &(&ctx.delta_weight_affine(&s1v) - &rho_c))?;

    let sol = sdp::solve(&prob, &settings.sdp)?;
    let space = prob.space();
    let ok = match sol.status {
        SolveStatus::Optimal => true,
        SolveStatus::Infeasible => false,
        // accept a stalled iterate only when it verifiably satisfies everything
        _ => sol.margins.iter().zip(prob.constraints().iter().chain(prob.scalar_constraints())).all(|(m, c)| *m >= c.margin),
    };
    if !ok {
        return Ok(None);
    }
    Ok(Some(LineSearchPoint {
        rho,
        level: sol.scalar(space, l),
        w: sol.symmetric(space, w),
        y: sol.matrix(space, y),
        s1: sol.matrix(space, s1).diag_vec(),
    }))
}

/// Margin-maximizing choice of `S₂ ⪰ 1e-8·I` with `(P, K, S₁, ϱ)` fixed.
pub fn choose_s2(vars: &CertificateVars, ctx: &SynthesisContext, settings: &SynthesisSettings) -> Result<(Vec<f64>, f64)> {
    let nu = ctx.n_u();
    let mut space = VarSpace::new();
    let s2 = space.add_bounded("S2", BlockKind::Diagonal(nu), Some(MULTIPLIER_FLOOR), None)?;
    let mut ops = Mi2Operands::constant(vars);
    ops.s2 = space.var(s2);
    let mi2 = mi2_affine(ctx, &ops)?;
    let mut prob = SdpProblem::new(space);
    prob.add_nsd("MI2", &mi2, 0.0)?;
    let sol = sdp::feasibility(&prob, &settings.sdp)?;
    let s2v = sol.matrix(prob.space(), s2).diag_vec();
    let mut out = vars.clone();
    out.s2 = s2v.clone();
    let margin = -linalg::lambda_max(&assemble_mi2(&out, ctx)?);
    Ok((s2v, margin))
}

/// Feasible starting point: a line search over ϱ on the change-of-variables
/// inequality in `(W, Y, S₁)`, then `P = W⁻¹`, `K = Y W⁻¹` and a margin
/// maximizing `S₂`. When the three-block margin falls short, `P` and the
/// multipliers are re-solved for the same `K` with `P ⪯ I`; failing that the
/// line-search margin grows tenfold (at most `settings.bootstrap_retries`
/// times) until the three-block margin exceeds the convex-concave margin.
pub fn initial_design(ctx: &SynthesisContext, settings: &SynthesisSettings) -> Result<InitialDesign> {
    let (a_d, b_d) = ctx.plant().discretize()?;
    if !check_stabilizable(&a_d, &b_d)? {
        return Err(Error::NotStabilizable);
    }
    if settings.rho_grid.is_empty() {
        return Err(Error::input("empty rho grid"));
    }
    let mut margin = settings.bootstrap_margin;
    let mut last_gap = None;
    for _ in 0..=settings.bootstrap_retries {
        let mut best: Option<LineSearchPoint> = None;
        for &rho in &settings.rho_grid {
            if !(RHO_MIN..=1.0 - RHO_MIN).contains(&rho) {
                return Err(Error::input(format!("grid value {rho} outside the admissible range")));
            }
            if let Some(pt) = line_search_point(ctx, rho, margin, settings)? {
                if best.as_ref().is_none_or(|b| pt.level < b.level) {
                    best = Some(pt);
                }
            }
        }
        let Some(pt) = best else {
            return Err(Error::Infeasible("no grid value of rho admits an initial design".into()));
        };
        let p = linalg::spd_inverse(&pt.w)?;
        let k = &pt.y * &p.to_matrix();
        let nu = ctx.n_u();
        let mut vars = CertificateVars { p, k, s1: pt.s1, s2: alloc::vec![MULTIPLIER_FLOOR; nu], rho: pt.rho };
        let (s2, achieved) = choose_s2(&vars, ctx, settings)?;
        vars.s2 = s2;
        let needed = ccp_margin(&vars, ctx, settings.strict_margin)?;
        if achieved >= needed {
            return Ok(InitialDesign { vars, level: pt.level, bootstrap_margin: margin, margin: achieved });
        }
        // keep K, re-solve P and the multipliers on the normalized scale P ⪯ I
        if let Ok((recentered, _)) = verify_gain(&vars.k, ctx, settings) {
            let achieved = -linalg::lambda_max(&assemble_mi2(&recentered, ctx)?);
            let needed = ccp_margin(&recentered, ctx, settings.strict_margin)?;
            if achieved >= needed && recentered.validate(ctx).is_ok() {
                return Ok(InitialDesign { vars: recentered, level: pt.level, bootstrap_margin: margin, margin: achieved });
            }
        }
        last_gap = Some((achieved, needed));
        margin *= 10.0;
    }
    let (a, n) = last_gap.unwrap_or_default();
    Err(Error::Infeasible(format!("initial design margin {a:e} below required {n:e}")))
}

/// Best multipliers for a fixed `(P, K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSearch {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub rho: f64,
    /// Largest `t ≤ 1` with the three-block matrix `⪯ −t·I`.
    pub margin: f64,
    pub status: SolveStatus,
}

/// Maximizes the negativity margin of the three-block matrix over
/// `(S₁, S₂, ϱ)` subject to `ΔᵀS₁Δ ≤ ϱ`.
pub fn multiplier_search(
    p: &SymmetricMatrix,
    k: &Matrix,
    ctx: &SynthesisContext,
    settings: &SynthesisSettings,
) -> Result<MultiplierSearch> {
    let nu = ctx.n_u();
    let probe = CertificateVars {
        p: p.clone(),
        k: k.clone(),
        s1: alloc::vec![1.0; nu],
        s2: alloc::vec![1.0; nu],
        rho: 0.5,
    };
    probe.check_shapes(ctx)?;
    linalg::cholesky(p)?;
    let mut space = VarSpace::new();
    let s1 = space.add_bounded("S1", BlockKind::Diagonal(nu), Some(MULTIPLIER_FLOOR), None)?;
    let s2 = space.add_bounded("S2", BlockKind::Diagonal(nu), Some(MULTIPLIER_FLOOR), None)?;
    let rho = space.add_bounded("rho", BlockKind::Scalar, Some(RHO_MIN), Some(1.0 - RHO_MIN))?;
    let t = space.add_bounded("t", BlockKind::Scalar, None, Some(1.0))?;
    let mut ops = Mi2Operands::constant(&probe);
    ops.s1 = space.var(s1);
    ops.s2 = space.var(s2);
    ops.rho = space.var(rho);
    let tv = space.var(t);
    let dim = 2 * ctx.n() + nu;
    let mi2 = &mi2_affine(ctx, &ops)? + &tv.times_matrix(&Matrix::identity(dim))?;
    let trace = &ctx.delta_weight_affine(&ops.s1) - &ops.rho;
    let mut prob = SdpProblem::new(space);
    prob.maximize(&tv)?;
    prob.add_nsd("MI2", &mi2, 0.0)?;
    prob.add_scalar_le("trace", &trace)?;
    let sol = sdp::solve(&prob, &settings.sdp)?;
    let sp = prob.space();
    let out = MultiplierSearch {
        s1: sol.matrix(sp, s1).diag_vec(),
        s2: sol.matrix(sp, s2).diag_vec(),
        rho: sol.scalar(sp, rho),
        margin: 0.0,
        status: sol.status,
    };
    let vars = CertificateVars { p: p.clone(), k: k.clone(), s1: out.s1.clone(), s2: out.s2.clone(), rho: out.rho };
    let margin = -linalg::lambda_max(&assemble_mi2(&vars, ctx)?);
    Ok(MultiplierSearch { margin, ..out })
}

/// Multipliers certifying a fixed `(P, K)`, or `Infeasible` when the best
/// achievable margin is not positive.
pub fn find_multipliers(
    p: &SymmetricMatrix,
    k: &Matrix,
    ctx: &SynthesisContext,
    settings: &SynthesisSettings,
) -> Result<CertificateVars> {
    let s = multiplier_search(p, k, ctx, settings)?;
    if !(s.margin > 0.0) {
        return Err(Error::Infeasible(format!("best multiplier margin {:e}", s.margin)));
    }
    Ok(CertificateVars { p: p.clone(), k: k.clone(), s1: s.s1, s2: s.s2, rho: s.rho })
}

/// Gain-only verification: for each ϱ of the grid, searches `(P, S₁, S₂)`
/// with `I ⪰ P` maximizing the common margin of the three-block matrix, of
/// `P` and of the multipliers. Returns the best certificate and its margin.
pub fn verify_gain(k: &Matrix, ctx: &SynthesisContext, settings: &SynthesisSettings) -> Result<(CertificateVars, f64)> {
    let (n, nu) = (ctx.n(), ctx.n_u());
    if k.rows() != nu || k.cols() != n {
        return Err(Error::dim(format!("gain must be {nu}×{n}")));
    }
    let mut best: Option<(CertificateVars, f64)> = None;
    for &rho in &settings.rho_grid {
        let mut space = VarSpace::new();
        let p = space.add("P", BlockKind::Symmetric(n))?;
        let s1 = space.add("S1", BlockKind::Diagonal(nu))?;
        let s2 = space.add("S2", BlockKind::Diagonal(nu))?;
        let t = space.add_bounded("t", BlockKind::Scalar, None, Some(1.0))?;
        let tv = space.var(t);
        let ops = Mi2Operands {
            p: space.var(p),
            k: AffineMat::constant(k.clone()),
            s1: space.var(s1),
            s2: space.var(s2),
            rho: AffineMat::constant(Matrix::from_rows(&[[rho]])),
        };
        let dim = 2 * n + nu;
        let mi2 = &mi2_affine(ctx, &ops)? + &tv.times_matrix(&Matrix::identity(dim))?;
        let mut prob = SdpProblem::new(space);
        prob.maximize(&tv)?;
        prob.add_nsd("MI2", &mi2, 0.0)?;
        prob.add_psd("P", &(&ops.p - &tv.times_matrix(&Matrix::identity(n))?), 0.0)?;
        prob.add_nsd("P<=I", &ops.p.add_constant(&Matrix::identity(n).scale(-1.0)), 0.0)?;
        prob.add_psd("S1", &(&ops.s1 - &tv.times_matrix(&Matrix::identity(nu))?), 0.0)?;
        prob.add_psd("S2", &(&ops.s2 - &tv.times_matrix(&Matrix::identity(nu))?), 0.0)?;
        let rho_c = AffineMat::constant(Matrix::from_rows(&[[rho]]));
        prob.add_scalar_le("trace", &(&ctx.delta_weight_affine(&ops.s1) - &rho_c))?;
        let sol = sdp::solve(&prob, &settings.sdp)?;
        let sp = prob.space();
        let vars = CertificateVars {
            p: sol.symmetric(sp, p),
            k: k.clone(),
            s1: sol.matrix(sp, s1).diag_vec(),
            s2: sol.matrix(sp, s2).diag_vec(),
            rho,
        };
        let margin = -linalg::lambda_max(&assemble_mi2(&vars, ctx)?)
            .max(-linalg::lambda_min(&vars.p))
            .max(-vars.s1.iter().chain(&vars.s2).fold(f64::INFINITY, |a, v| a.min(*v)));
        if best.as_ref().is_none_or(|b| margin > b.1) {
            best = Some((vars, margin));
        }
    }
    best.ok_or_else(|| Error::Infeasible("no grid value produced a candidate".into()))
}
