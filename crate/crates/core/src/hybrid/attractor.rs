use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricMatrix};
use crate::math;

use super::lyapunov::{grid_golden_min, lyapunov_value, LyapunovDesign};
use super::sim::HybridState;

/// `ϖ = min_{τ∈[0,T]} λ_min(exp(A_cl τ)ᵀ exp(A_cl τ))`.
pub fn varpi(a_cl: &Matrix, period: f64, grid_points: usize) -> Result<f64> {
    if !a_cl.is_square() {
        return Err(Error::dim("A_cl must be square"));
    }
    if grid_points < 2 || !(period > 0.0) {
        return Err(Error::input("need T > 0 and at least two grid points"));
    }
    let n = a_cl.rows();
    let f = |tau: f64| -> Result<f64> {
        let e = linalg::expm(&a_cl.scale(tau))?;
        Ok(linalg::lambda_min(&SymmetricMatrix::identity(n).congruence(&e)?))
    };
    grid_golden_min(f, period, grid_points)
}

/// Which set plays the role of the attractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttractorConvention {
    /// `V(ξ, τ) ≤ 1` with the clock-reversed transition `Σ(τ)`.
    #[default]
    Sublevel,
    /// `e^{−στ} ξᵀ exp(A_clᵀτ) P exp(A_cl τ) ξ ≤ 1`.
    Printed,
}

pub fn attractor_value(design: &LyapunovDesign, state: &HybridState, convention: AttractorConvention) -> Result<f64> {
    match convention {
        AttractorConvention::Sublevel => lyapunov_value(design, state),
        AttractorConvention::Printed => {
            // same domain checks as V
            lyapunov_value(design, state)?;
            let tau = state.tau.clamp(0.0, design.period);
            let y = linalg::expm(&design.a_cl.scale(tau))?.mul_vec(&state.xi)?;
            Ok(math::exp(-design.sigma * tau) * design.p.quad_form(&y))
        }
    }
}

pub fn attractor_membership(design: &LyapunovDesign, state: &HybridState, convention: AttractorConvention) -> Result<bool> {
    Ok(attractor_value(design, state, convention)? <= LyapunovDesign::MU)
}

/// Radius `1/sqrt(ϖ·λ_min(P))` of a Euclidean ball containing the attractor.
pub fn attractor_outer_radius(p: &SymmetricMatrix, varpi: f64) -> Result<f64> {
    if !(varpi > 0.0) {
        return Err(Error::input("ϖ must be positive"));
    }
    let lmin = linalg::lambda_min(p);
    if !(lmin > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(1.0 / math::sqrt(varpi * lmin))
}

/// Point on the boundary of the projection of the attractor onto `(ξ₁, ξ₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub angle: f64,
    pub radius: f64,
    pub x: f64,
    pub y: f64,
}

/// Boundary of the projection onto the first two coordinates of
/// `∪_τ E(exp(A_clᵀτ) P exp(A_cl τ))`, as the largest radius per angle over
/// `tau_points` uniformly spaced clock values.
pub fn attractor_boundary(design: &LyapunovDesign, angles: usize, tau_points: usize) -> Result<Vec<BoundarySample>> {
    if design.n() < 2 {
        return Err(Error::dim("projection needs at least two coordinates"));
    }
    if angles == 0 || tau_points < 2 {
        return Err(Error::input("need at least one angle and two clock values"));
    }
    // The projection of {ξ : ξᵀNξ ≤ 1} is {z : zᵀ([N⁻¹]₁₂)⁻¹z ≤ 1}.
    let mut shapes = Vec::with_capacity(tau_points);
    for i in 0..tau_points {
        let tau = design.period * i as f64 / (tau_points - 1) as f64;
        let e = linalg::expm(&design.a_cl.scale(tau))?;
        let n_inv = linalg::spd_inverse(&design.p.congruence(&e)?)?;
        let (a, b, c) = (n_inv.get(0, 0), n_inv.get(0, 1), n_inv.get(1, 1));
        let block = SymmetricMatrix::from_row_major(2, alloc::vec![a, b, b, c])?;
        shapes.push(linalg::spd_inverse(&block)?);
    }
    let two_pi = 2.0 * core::f64::consts::PI;
    Ok((0..angles)
        .map(|k| {
            let angle = two_pi * k as f64 / angles as f64;
            let d = [math::cos(angle), math::sin(angle)];
            let radius = shapes
                .iter()
                .map(|s| 1.0 / math::sqrt(s.quad_form(&d)))
                .fold(0.0, f64::max);
            BoundarySample { angle, radius, x: radius * d[0], y: radius * d[1] }
        })
        .collect())
}

/// Largest per-angle radius of the boundary at the direction of `(x, y)`,
/// interpolated linearly between the neighbouring samples.
pub fn boundary_radius_at(samples: &[BoundarySample], x: f64, y: f64) -> f64 {
    let m = samples.len();
    if m == 0 {
        return 0.0;
    }
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut angle = math::atan2(y, x);
    if angle < 0.0 {
        angle += two_pi;
    }
    let step = two_pi / m as f64;
    let i = ((angle / step) as usize).min(m - 1);
    let w = (angle - samples[i].angle) / step;
    let next = samples[(i + 1) % m].radius;
    (1.0 - w) * samples[i].radius + w * next
}
