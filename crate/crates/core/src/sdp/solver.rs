use alloc::vec;
use alloc::vec::Vec;

use super::expr::AffineMatrixExpr;
use super::problem::{LmiConstraint, LmiSense, SdpProblem, SdpSolution, Sense, SolveStatus};
use super::space::BlockKind;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricMatrix};
use crate::math;

/// Interior-point settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSettings {
    pub max_iterations: usize,
    /// Relative duality gap required for optimality.
    pub gap_tolerance: f64,
    /// Relative primal and dual residual required for optimality.
    pub feasibility_tolerance: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Implicit box `|xᵢ| ≤ box_bound` on parameters without explicit bounds.
    pub box_bound: f64,
    /// Initial penalty on the phase-I shift, relative to `1 + ‖c‖∞`.
    pub big_m: f64,
    /// Number of times the penalty is multiplied by 100 before declaring
    /// infeasibility.
    pub big_m_retries: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings {
            max_iterations: 200,
            gap_tolerance: 1e-8,
            feasibility_tolerance: 1e-8,
            step_fraction: 0.98,
            box_bound: 1e6,
            big_m: 1e4,
            big_m_retries: 3,
        }
    }
}

/// Default strict-inequality margin `1e-7·(1 + ‖C‖₂)` for a constraint with
/// constant term `C`.
pub fn strict_margin(constant: &SymmetricMatrix) -> f64 {
    let e = linalg::sym_eig(constant).values;
    let norm = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    1e-7 * (1.0 + norm)
}

/// `F(y) = c + Σ yᵢ aᵢ ⪰ 0` in dense form.
struct StdBlock {
    c: Matrix,
    a: Vec<(usize, Matrix)>,
}

impl StdBlock {
    fn from_expr(e: &AffineMatrixExpr) -> Self {
        StdBlock {
            c: e.constant_term().to_matrix(),
            a: e.terms().iter().map(|(i, m)| (*i, m.to_matrix())).collect(),
        }
    }

    fn scalar(c: f64, index: usize, coeff: f64) -> Self {
        StdBlock { c: Matrix::from_rows(&[[c]]), a: vec![(index, Matrix::from_rows(&[[coeff]]))] }
    }

    fn dim(&self) -> usize {
        self.c.rows()
    }

    fn eval(&self, y: &[f64]) -> Matrix {
        let mut out = self.c.clone();
        for (i, a) in &self.a {
            axpy(&mut out, y[*i], a);
        }
        out
    }
}

fn axpy(out: &mut Matrix, s: f64, a: &Matrix) {
    if s == 0.0 {
        return;
    }
    let n = out.rows();
    for r in 0..n {
        for c in 0..out.cols() {
            out[(r, c)] += s * a[(r, c)];
        }
    }
}

fn inner(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

fn sym(a: &Matrix) -> Matrix {
    (a + &a.transpose()).scale(0.5)
}

fn chol(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = math::sqrt(d);
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut v = 0.5 * (a[(i, j)] + a[(j, i)]);
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    Some(l)
}

fn spd_inv(a: &Matrix) -> Option<Matrix> {
    let l = chol(a)?;
    let li = linalg::lower_triangular_inverse(&l);
    Some(&li.transpose() * &li)
}

/// Largest `α` with `X + α dX ⪰ 0`, infinite when `dX ⪰ 0`.
fn max_step(x: &Matrix, dx: &Matrix) -> Option<f64> {
    if x.rows() == 1 {
        let (v, d) = (x[(0, 0)], dx[(0, 0)]);
        return Some(if d < 0.0 { -v / d } else { f64::INFINITY });
    }
    let l = chol(x)?;
    let li = linalg::lower_triangular_inverse(&l);
    let w = &(&li * dx) * &li.transpose();
    let s = SymmetricMatrix::from_matrix_sym(&w).ok()?;
    let lmin = linalg::lambda_min(&s);
    Some(if lmin < 0.0 { -1.0 / lmin } else { f64::INFINITY })
}

struct CoreResult {
    status: SolveStatus,
    y: Vec<f64>,
    lower_bound: f64,
    relgap: f64,
    pinf: f64,
    dinf: f64,
    iterations: usize,
}

/// Infeasible primal-dual path following with the HKM direction and a
/// Mehrotra predictor-corrector, for `min fᵀy s.t. F_k(y) ⪰ 0` starting from
/// `y0` with every `F_k(y0) ≻ 0`.
fn interior_point(blocks: &[StdBlock], f: &[f64], y0: Vec<f64>, settings: &SdpSettings) -> CoreResult {
    let m = f.len();
    let mut y = y0;
    let mut z: Vec<Matrix> = blocks.iter().map(|b| b.eval(&y)).collect();
    let n_total: usize = blocks.iter().map(StdBlock::dim).sum();
    let f_norm = f.iter().map(|v| v * v).sum::<f64>();
    let f_norm = math::sqrt(f_norm);
    let c_norm = math::sqrt(blocks.iter().map(|b| inner(&b.c, &b.c)).sum::<f64>());

    // Centered start X = μ₀ Z⁻¹.
    let mut xi = 1.0f64;
    for (i, fi) in f.iter().enumerate() {
        let a_norm: f64 = math::sqrt(
            blocks
                .iter()
                .flat_map(|b| b.a.iter().filter(|t| t.0 == i))
                .map(|t| inner(&t.1, &t.1))
                .sum(),
        );
        xi = xi.max((1.0 + fi.abs()) / (1.0 + a_norm));
    }
    let zeta = blocks
        .iter()
        .filter(|b| b.dim() > 1)
        .map(|b| b.eval(&y).as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs())))
        .fold(1.0f64, f64::max);
    let mu0 = xi * zeta;
    let mut x: Vec<Matrix> = Vec::with_capacity(blocks.len());
    for zk in &z {
        match spd_inv(zk) {
            Some(zi) => x.push(zi.scale(mu0)),
            None => {
                return CoreResult {
                    status: SolveStatus::NumericalFailure,
                    y,
                    lower_bound: f64::NEG_INFINITY,
                    relgap: f64::INFINITY,
                    pinf: f64::INFINITY,
                    dinf: f64::INFINITY,
                    iterations: 0,
                }
            }
        }
    }

    let mut best: Option<(f64, Vec<f64>, f64, f64, f64, f64)> = None;
    let mut stalls = 0;
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;

    for iter in 0..=settings.max_iterations {
        iterations = iter;
        // residuals
        let mut rp = f.to_vec();
        for (b, xk) in blocks.iter().zip(&x) {
            for (i, a) in &b.a {
                rp[*i] -= inner(a, xk);
            }
        }
        let rd: Vec<Matrix> = blocks.iter().zip(&z).map(|(b, zk)| &b.eval(&y) - zk).collect();
        let xz: f64 = x.iter().zip(&z).map(|(a, b)| inner(a, b)).sum();
        let mu = xz / n_total as f64;
        let pobj: f64 = f.iter().zip(&y).map(|(a, b)| a * b).sum();
        let dobj: f64 = -blocks.iter().zip(&x).map(|(b, xk)| inner(&b.c, xk)).sum::<f64>();
        let relgap = xz.abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = math::sqrt(rp.iter().map(|v| v * v).sum::<f64>()) / (1.0 + f_norm);
        let dinf = math::sqrt(rd.iter().map(|r| inner(r, r)).sum::<f64>()) / (1.0 + c_norm);
        let score = relgap.max(pinf).max(dinf);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, y.clone(), dobj, relgap, pinf, dinf));
        }
        if relgap <= settings.gap_tolerance
            && pinf <= settings.feasibility_tolerance
            && dinf <= settings.feasibility_tolerance
        {
            status = SolveStatus::Optimal;
            break;
        }
        if iter == settings.max_iterations {
            break;
        }

        let zinv: Option<Vec<Matrix>> = z.iter().map(spd_inv).collect();
        let Some(zinv) = zinv else {
            status = SolveStatus::NumericalFailure;
            break;
        };

        // Schur complement M_ij = Σ_k tr(a_ik X_k a_jk Z_k⁻¹)
        let mut schur = Matrix::zeros(m, m);
        let mut g: Vec<Vec<Matrix>> = Vec::with_capacity(blocks.len());
        for (k, b) in blocks.iter().enumerate() {
            let gk: Vec<Matrix> = b.a.iter().map(|(_, a)| &(&x[k] * a) * &zinv[k]).collect();
            for (p, (i, _)) in b.a.iter().enumerate() {
                for (j, aj) in &b.a {
                    schur[(*i, *j)] += inner(&gk[p], aj);
                }
            }
            g.push(gk);
        }
        let schur = sym(&schur);
        let Some(schur_l) = chol(&schur) else {
            status = SolveStatus::NumericalFailure;
            break;
        };

        // X Rd Z⁻¹ is shared by predictor and corrector
        let xrdz: Vec<Matrix> = (0..blocks.len()).map(|k| sym(&(&(&x[k] * &rd[k]) * &zinv[k]))).collect();

        let direction = |sigma_mu: f64, corr: Option<&[Matrix]>| -> (Vec<f64>, Vec<Matrix>, Vec<Matrix>) {
            let h: Vec<Matrix> = (0..blocks.len())
                .map(|k| {
                    let mut hk = zinv[k].scale(sigma_mu);
                    hk = &hk - &xrdz[k];
                    if let Some(c) = corr {
                        hk = &hk - &c[k];
                    }
                    hk
                })
                .collect();
            let mut rhs: Vec<f64> = f.iter().map(|v| -v).collect();
            for (k, b) in blocks.iter().enumerate() {
                for (i, a) in &b.a {
                    rhs[*i] += inner(a, &h[k]);
                }
            }
            let dy = linalg::cholesky_solve(&schur_l, &rhs);
            let mut dz = Vec::with_capacity(blocks.len());
            let mut dx = Vec::with_capacity(blocks.len());
            for (k, b) in blocks.iter().enumerate() {
                let mut dzk = rd[k].clone();
                for (i, a) in &b.a {
                    axpy(&mut dzk, dy[*i], a);
                }
                let mut dxk = zinv[k].scale(sigma_mu);
                dxk = &dxk - &x[k];
                dxk = &dxk - &sym(&(&(&x[k] * &dzk) * &zinv[k]));
                if let Some(c) = corr {
                    dxk = &dxk - &c[k];
                }
                dz.push(dzk);
                dx.push(dxk);
            }
            (dy, dx, dz)
        };

        let steps = |dx: &[Matrix], dz: &[Matrix]| -> Option<(f64, f64)> {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for k in 0..blocks.len() {
                ap = ap.min(max_step(&x[k], &dx[k])?);
                ad = ad.min(max_step(&z[k], &dz[k])?);
            }
            Some(((settings.step_fraction * ap).min(1.0), (settings.step_fraction * ad).min(1.0)))
        };

        // predictor
        let (_, dxa, dza) = direction(0.0, None);
        let Some((apa, ada)) = steps(&dxa, &dza) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let mut xz_aff = 0.0;
        for k in 0..blocks.len() {
            let mut xa = x[k].clone();
            axpy(&mut xa, apa, &dxa[k]);
            let mut za = z[k].clone();
            axpy(&mut za, ada, &dza[k]);
            xz_aff += inner(&xa, &za);
        }
        let mu_aff = xz_aff / n_total as f64;
        let ratio = (mu_aff / mu).clamp(0.0, 1.0);
        let sigma = ratio * ratio * ratio;

        // corrector with the second-order term sym(dXa dZa Z⁻¹)
        let corr: Vec<Matrix> = (0..blocks.len()).map(|k| sym(&(&(&dxa[k] * &dza[k]) * &zinv[k]))).collect();
        let (dy, dx, dz) = direction(sigma * mu, Some(&corr));
        let Some((ap, ad)) = steps(&dx, &dz) else {
            status = SolveStatus::NumericalFailure;
            break;
        };

        for k in 0..blocks.len() {
            axpy(&mut x[k], ap, &dx[k]);
            axpy(&mut z[k], ad, &dz[k]);
            x[k] = sym(&x[k]);
            z[k] = sym(&z[k]);
        }
        for i in 0..m {
            y[i] += ad * dy[i];
        }
        if ap < 1e-9 && ad < 1e-9 {
            stalls += 1;
            if stalls >= 3 {
                status = SolveStatus::NumericalFailure;
                break;
            }
        } else {
            stalls = 0;
        }
    }

    if status == SolveStatus::Optimal {
        let (_, _, lower_bound, relgap, pinf, dinf) = best.clone().unwrap_or_default();
        // the last iterate is the converged one
        return CoreResult { status, y, lower_bound, relgap, pinf, dinf, iterations };
    }
    let (_, yb, lower_bound, relgap, pinf, dinf) = best.unwrap_or((0.0, y, f64::NEG_INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY));
    CoreResult { status, y: yb, lower_bound, relgap, pinf, dinf, iterations }
}

/// Interior start inside the explicit bounds of one parameter.
fn start_value(lower: Option<f64>, upper: Option<f64>) -> f64 {
    match (lower, upper) {
        (Some(l), Some(u)) => 0.5 * (l + u),
        (Some(l), None) => l + 1.0f64.max(l.abs()),
        (None, Some(u)) => u - 1.0f64.max(u.abs()),
        (None, None) => 0.0,
    }
}

fn solve_constraints(
    problem: &SdpProblem,
    constraints: &[&LmiConstraint],
    settings: &SdpSettings,
) -> Result<SdpSolution> {
    if constraints.is_empty() {
        return Err(Error::input("problem has no constraints"));
    }
    let space = problem.space();
    let m = space.len();
    let s_idx = m;
    let sign = if problem.sense() == Sense::Maximize { -1.0 } else { 1.0 };
    let f_base: Vec<f64> = problem.objective.iter().map(|c| sign * c).collect();
    let f_inf = f_base.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let psd_forms: Vec<AffineMatrixExpr> = constraints.iter().map(|c| c.as_psd()).collect();
    let c_max = psd_forms
        .iter()
        .map(|e| e.constant_term().max_abs())
        .fold(0.0f64, f64::max);
    let s_tol = settings.feasibility_tolerance * (1.0 + c_max);

    let mut y0 = vec![0.0; m + 1];
    let mut eff_bounds = Vec::with_capacity(m);
    for (i, y) in y0.iter_mut().enumerate().take(m) {
        let (l, u) = space.param_bounds(i);
        let le = l.unwrap_or(-settings.box_bound);
        let ue = u.unwrap_or(settings.box_bound);
        if !(le < ue) {
            return Err(Error::input("variable bounds exclude the implicit box"));
        }
        let mut v = start_value(l, u);
        if !(v > le && v < ue) {
            v = 0.5 * (le + ue);
        }
        *y = v;
        eff_bounds.push((le, ue));
    }
    let worst = psd_forms
        .iter()
        .map(|e| Ok(linalg::lambda_min(&e.evaluate(&y0)?)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let s0 = (-worst).max(0.0) * 1.1 + 1.0;
    y0[s_idx] = s0;

    let mut blocks: Vec<StdBlock> = psd_forms
        .iter()
        .map(|e| StdBlock::from_expr(&e.add_scalar_var_identity(s_idx, 1.0)))
        .collect();
    for (i, (le, ue)) in eff_bounds.iter().enumerate() {
        blocks.push(StdBlock::scalar(-le, i, 1.0));
        blocks.push(StdBlock::scalar(*ue, i, -1.0));
    }
    blocks.push(StdBlock::scalar(0.0, s_idx, 1.0));
    blocks.push(StdBlock::scalar(settings.box_bound.max(10.0 * s0), s_idx, -1.0));

    let mut big_m = settings.big_m * (1.0 + f_inf);
    let mut prev_shift = f64::INFINITY;
    let mut round = 0;
    loop {
        let mut f = f_base.clone();
        f.push(big_m);
        let core = interior_point(&blocks, &f, y0.clone(), settings);
        let shift = core.y[s_idx];
        let mut status = core.status;
        if shift > s_tol {
            let stuck = shift >= 0.5 * prev_shift;
            if round < settings.big_m_retries && !stuck {
                prev_shift = shift;
                big_m *= 100.0;
                round += 1;
                continue;
            }
            if status == SolveStatus::Optimal {
                status = SolveStatus::Infeasible;
            }
        }
        let x: Vec<f64> = core.y[..m].to_vec();
        let margins = constraints.iter().map(|c| c.achieved(&x)).collect::<Result<Vec<f64>>>()?;
        let objective = problem.objective_value(&x);
        let dual_bound = sign * (core.lower_bound - big_m * shift) + problem.objective_constant;
        return Ok(SdpSolution {
            status,
            x,
            objective,
            gap: core.relgap,
            dual_bound,
            primal_residual: core.pinf,
            dual_residual: core.dinf,
            margins,
            shift,
            feasibility_margin: None,
            iterations: core.iterations,
        });
    }
}

/// Solves the problem with a phase-I shift on every constraint.
pub fn solve(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    let constraints: Vec<&LmiConstraint> = problem.all_constraints().collect();
    solve_constraints(problem, &constraints, settings)
}

/// Maximizes a uniform slack `t ≤ 1` added to every constraint, ignoring the
/// objective. Infeasible when the best slack is negative.
pub fn feasibility(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    let mut space = problem.space().clone();
    let mut name = alloc::string::String::from("__slack");
    while space.find(&name).is_some() {
        name.push('_');
    }
    let t = space.add_bounded(&name, BlockKind::Scalar, None, Some(1.0))?;
    let t_idx = space.block(t).offset;
    let tv = space.var(t);
    let mut aux = SdpProblem::new(space);
    aux.maximize(&tv)?;
    for c in problem.all_constraints() {
        let s = match c.sense {
            LmiSense::NegativeSemidefinite => 1.0,
            LmiSense::PositiveSemidefinite => -1.0,
        };
        aux.add_lmi(&c.name, c.expr.add_scalar_var_identity(t_idx, s), c.sense, c.margin)?;
    }
    let constraints: Vec<&LmiConstraint> = aux.all_constraints().collect();
    let sol = solve_constraints(&aux, &constraints, settings)?;
    let m = problem.space().len();
    let t_val = sol.x[t_idx];
    let x = sol.x[..m].to_vec();
    let margins = problem.margins(&x)?;
    let c_max = problem
        .all_constraints()
        .map(|c| c.as_psd().constant_term().max_abs())
        .fold(0.0f64, f64::max);
    let tol = settings.feasibility_tolerance * (1.0 + c_max);
    let status = match sol.status {
        SolveStatus::Optimal if t_val < -tol => SolveStatus::Infeasible,
        s => s,
    };
    Ok(SdpSolution {
        status,
        objective: problem.objective_value(&x),
        x,
        margins,
        feasibility_margin: Some(t_val),
        ..sol
    })
}
