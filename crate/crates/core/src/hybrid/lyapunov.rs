use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricMatrix};
use crate::math;
use crate::plant::{build_closed_loop, PlantSpec};

use super::sim::{HybridArc, HybridState, CLOCK_TOLERANCE};

/// Relative tolerance of the flow-decay check.
pub const FLOW_TOLERANCE: f64 = 1e-7;
/// Absolute slack on the sublevel-invariance check at jumps.
pub const INVARIANCE_TOLERANCE: f64 = 1e-9;
/// Relative round-off allowance on the jump-decrease check.
pub const JUMP_ROUNDOFF: f64 = 1e-12;

/// `V(ξ, τ) = exp(−στ)·ξᵀΣ(τ)ᵀPΣ(τ)ξ` with `Σ(τ) = exp(A_cl(T−τ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovDesign {
    pub p: SymmetricMatrix,
    pub sigma: f64,
    pub period: f64,
    pub a_cl: Matrix,
}

impl LyapunovDesign {
    /// Level of the certified sublevel set.
    pub const MU: f64 = 1.0;

    pub fn new(p: SymmetricMatrix, sigma: f64, plant: &PlantSpec) -> Result<Self> {
        let a_cl = build_closed_loop(plant).a_cl;
        Self::from_parts(p, sigma, plant.period(), a_cl)
    }

    pub fn from_parts(p: SymmetricMatrix, sigma: f64, period: f64, a_cl: Matrix) -> Result<Self> {
        if !a_cl.is_square() || a_cl.rows() != p.dim() {
            return Err(Error::dim("P and A_cl dimensions differ"));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() || !(period > 0.0) || !period.is_finite() {
            return Err(Error::input("σ must be nonnegative and T positive"));
        }
        Ok(LyapunovDesign { p, sigma, period, a_cl })
    }

    pub fn n(&self) -> usize {
        self.p.dim()
    }

    fn check_state(&self, state: &HybridState) -> Result<f64> {
        if state.xi.len() != self.n() {
            return Err(Error::dim("state and P dimensions differ"));
        }
        if !(state.tau >= -CLOCK_TOLERANCE && state.tau <= self.period + CLOCK_TOLERANCE) {
            return Err(Error::input("clock outside [0, T]"));
        }
        Ok(state.tau.clamp(0.0, self.period))
    }

    /// `Σ(τ)`.
    pub fn sigma_map(&self, tau: f64) -> Result<Matrix> {
        linalg::expm(&self.a_cl.scale(self.period - tau))
    }
}

pub fn lyapunov_value(design: &LyapunovDesign, state: &HybridState) -> Result<f64> {
    let tau = design.check_state(state)?;
    let y = design.sigma_map(tau)?.mul_vec(&state.xi)?;
    Ok(math::exp(-design.sigma * tau) * design.p.quad_form(&y))
}

/// Dwell bound `(1/γ)·ln(V₀/μ)`, zero inside the sublevel set.
pub fn upsilon_bound(v0: f64, mu: f64, gamma: f64) -> Result<f64> {
    if !(mu > 0.0) || !(gamma > 0.0) {
        return Err(Error::input("μ and γ must be positive"));
    }
    if !(v0 >= 0.0) {
        return Err(Error::input("V must be nonnegative"));
    }
    if v0 <= mu {
        return Ok(0.0);
    }
    Ok(math::ln(v0 / mu) / gamma)
}

/// Jump-decrease rate from the certificate data:
/// `Q = −βI + (1 − e^{−σT})P`, `α = |λ_max(Q)|`,
/// `ω₂ = max_τ e^{−στ} λ_max(Σ(τ)ᵀPΣ(τ))`, `λ_d = −ln max{1 − α/ω₂, ς}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpDecay {
    pub beta: f64,
    pub alpha: f64,
    pub omega2: f64,
    pub lambda_d: f64,
}

pub fn jump_decay(design: &LyapunovDesign, m: &SymmetricMatrix, varsigma: f64, grid_points: usize) -> Result<JumpDecay> {
    if !(varsigma > 0.0 && varsigma < 1.0) {
        return Err(Error::input("ς must lie in (0, 1)"));
    }
    if grid_points < 2 {
        return Err(Error::input("at least two grid points"));
    }
    let lm = linalg::lambda_max(m);
    if !(lm < 0.0) {
        return Err(Error::input("M is not negative definite"));
    }
    let beta = -lm;
    let mut q = design.p.scale(1.0 - math::exp(-design.sigma * design.period));
    q.add_identity(-beta);
    let q_max = linalg::lambda_max(&q);
    if !(q_max < 0.0) {
        return Err(Error::input("σ too large for the jump decrease"));
    }
    let alpha = -q_max;
    let f = |tau: f64| -> Result<f64> {
        let pt = design.p.congruence(&design.sigma_map(tau)?)?;
        Ok(-math::exp(-design.sigma * tau) * linalg::lambda_max(&pt))
    };
    let omega2 = -grid_golden_min(f, design.period, grid_points)?;
    let lambda_d = -math::ln((1.0 - alpha / omega2).max(varsigma));
    Ok(JumpDecay { beta, alpha, omega2, lambda_d })
}

/// Minimum of `f` on `[0, T]` by a uniform grid followed by golden-section
/// refinement between the neighbours of the grid argmin.
pub(crate) fn grid_golden_min<F>(f: F, period: f64, grid_points: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let last = grid_points - 1;
    let at = |i: usize| period * i as f64 / last as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..grid_points {
        let v = f(at(i))?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let (mut a, mut b) = (at(best.0.saturating_sub(1)), at((best.0 + 1).min(last)));
    let g = 0.5 * (math::sqrt(5.0) - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..80 {
        if b - a <= 1e-14 * (1.0 + period) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(best.1.min(fc).min(fd))
}

/// Worst margins observed by [`certify_arc`]; margins are nonnegative when a
/// check holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcCertificate {
    pub flow_ok: bool,
    /// Largest `|V − e^{−σΔt}V(t_j)| / max(V, e^{−σΔt}V(t_j))` along flows.
    pub worst_flow_error: f64,
    pub jump_decrease_ok: bool,
    /// Smallest `e^{−λ_d}V(pre) − V(post)` relative to `V(pre)` over jumps outside the sublevel set.
    pub worst_jump_decrease_margin: f64,
    pub jump_invariance_ok: bool,
    /// Smallest `μ + 1e-9 − V(post)` over jumps from inside the sublevel set.
    pub worst_invariance_margin: f64,
    pub claim1_ok: bool,
    /// `Υ(ξ₀)` with the γ used for the cross-check.
    pub upsilon: f64,
    pub gamma: f64,
    /// Hybrid time of the first sample with `V ≤ μ`.
    pub entered: Option<(f64, usize)>,
    /// Whether every later sample has `V ≤ μ + 1e-6`.
    pub stayed: bool,
    pub decrease_jumps: usize,
    pub invariance_jumps: usize,
    /// `V` at every sample, in arc order.
    pub values: Vec<f64>,
}

impl ArcCertificate {
    pub fn passed(&self) -> bool {
        self.flow_ok && self.jump_decrease_ok && self.jump_invariance_ok && self.claim1_ok
    }
}

/// Checks the Lyapunov conditions along an arc: exact `e^{−σΔt}` decay on
/// flows, `V⁺ ≤ e^{−λ_d}V` at jumps from outside `L_V(μ)`, `V⁺ ≤ μ` at jumps
/// from inside, and the dwell bound with `γ = min(σ, λ_d)` unless given.
pub fn certify_arc(
    arc: &HybridArc,
    design: &LyapunovDesign,
    lambda_d_expected: f64,
    gamma: Option<f64>,
) -> Result<ArcCertificate> {
    if !(lambda_d_expected >= 0.0) {
        return Err(Error::input("λ_d must be nonnegative"));
    }
    let mu = LyapunovDesign::MU;
    let mut values = Vec::new();
    let mut flow_err: f64 = 0.0;
    for seg in &arc.segments {
        let first = seg.samples.first().ok_or_else(|| Error::input("empty flow segment"))?;
        let v0 = lyapunov_value(design, &first.state)?;
        for s in &seg.samples {
            let v = lyapunov_value(design, &s.state)?;
            let pred = math::exp(-design.sigma * (s.t - seg.t_start)) * v0;
            let scale = v.max(pred);
            if scale > 0.0 {
                flow_err = flow_err.max((v - pred).abs() / scale);
            }
            values.push(v);
        }
    }

    let ratio = math::exp(-lambda_d_expected);
    let mut dec_margin = f64::INFINITY;
    let mut inv_margin = f64::INFINITY;
    let (mut n_dec, mut n_inv) = (0, 0);
    for jump in &arc.jumps {
        let pre = lyapunov_value(design, &jump.pre)?;
        let post = lyapunov_value(design, &jump.post)?;
        if pre > mu {
            n_dec += 1;
            dec_margin = dec_margin.min((ratio * pre - post) / pre + JUMP_ROUNDOFF);
        } else {
            n_inv += 1;
            inv_margin = inv_margin.min(mu + INVARIANCE_TOLERANCE - post);
        }
    }

    let gamma = gamma.unwrap_or(design.sigma.min(lambda_d_expected));
    let v_start = values.first().copied().unwrap_or(0.0);
    let (upsilon, claim1_ok) = if v_start <= mu {
        (0.0, values.iter().all(|v| *v <= mu + INVARIANCE_TOLERANCE))
    } else if gamma > 0.0 {
        let ups = upsilon_bound(v_start, mu, gamma)?;
        let ok = arc
            .samples()
            .zip(&values)
            .filter(|(s, _)| s.t + s.j as f64 >= ups)
            .all(|(_, v)| *v <= mu + INVARIANCE_TOLERANCE);
        (ups, ok)
    } else {
        (f64::INFINITY, true)
    };

    let mut entered = None;
    let mut stayed = true;
    for (s, v) in arc.samples().zip(&values) {
        match entered {
            None if *v <= mu => entered = Some((s.t, s.j)),
            Some(_) if *v > mu + 1e-6 => stayed = false,
            _ => {}
        }
    }

    Ok(ArcCertificate {
        flow_ok: flow_err <= FLOW_TOLERANCE,
        worst_flow_error: flow_err,
        jump_decrease_ok: dec_margin >= 0.0,
        worst_jump_decrease_margin: dec_margin,
        jump_invariance_ok: inv_margin >= 0.0,
        worst_invariance_margin: inv_margin,
        claim1_ok,
        upsilon,
        gamma,
        entered,
        stayed,
        decrease_jumps: n_dec,
        invariance_jumps: n_inv,
        values,
    })
}

/// Jump-decrease exponent `−ln(V⁺/V)` observed at the first jump starting
/// outside `L_V(μ)`.
pub fn observed_jump_decay(arc: &HybridArc, design: &LyapunovDesign) -> Result<Option<f64>> {
    for jump in &arc.jumps {
        let pre = lyapunov_value(design, &jump.pre)?;
        if pre > LyapunovDesign::MU {
            let post = lyapunov_value(design, &jump.post)?;
            return Ok(Some(-math::ln(post / pre)));
        }
    }
    Ok(None)
}

/// Largest violation of the two sector inequalities by `v = χ⁺ − Kξ` over
/// all jumps, for diagonal multipliers `S₁`, `S₂`.
pub fn jump_sector_residual(arc: &HybridArc, k: &Matrix, s1: &[f64], s2: &[f64], delta: &[f64]) -> Result<f64> {
    let nu = delta.len();
    if s1.len() != nu || s2.len() != nu || k.rows() != nu {
        return Err(Error::dim("multipliers, gain and steps disagree"));
    }
    let mut worst = f64::NEG_INFINITY;
    for jump in &arc.jumps {
        let u = k.mul_vec(&jump.pre.xi)?;
        let n = jump.post.xi.len();
        let v: Vec<f64> = jump.post.xi[n - nu..].iter().zip(&u).map(|(c, u)| c - u).collect();
        let check = crate::plant::sector_check(&u, &v, s1, s2, delta)?;
        worst = worst.max(check.residual1).max(check.residual2);
    }
    Ok(worst)
}
