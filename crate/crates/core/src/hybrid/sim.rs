use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::plant::{build_closed_loop, quantize, PlantSpec};

/// Tolerance on the clock when testing membership of the jump set.
pub const CLOCK_TOLERANCE: f64 = 1e-12;

/// `(ξ, τ)` with `ξ = (x_p, χ)` and `τ ∈ [0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    pub xi: Vec<f64>,
    pub tau: f64,
}

impl HybridState {
    pub fn new(xi: Vec<f64>, tau: f64) -> Self {
        HybridState { xi, tau }
    }
}

/// A state tagged with its hybrid time `(t, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridSample {
    pub t: f64,
    pub j: usize,
    pub state: HybridState,
}

/// Flow on `[t_start, t_start + duration] × {j}` with dense output; the first
/// and last samples are the segment endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSegment {
    pub j: usize,
    pub t_start: f64,
    pub duration: f64,
    pub samples: Vec<HybridSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub t: f64,
    /// Jump counter before the jump.
    pub j: usize,
    pub pre: HybridState,
    pub post: HybridState,
}

/// Solution on a hybrid time domain: `segments[j]` flows with counter `j` and
/// `jumps[j]` links `segments[j]` to `segments[j + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridArc {
    pub segments: Vec<FlowSegment>,
    pub jumps: Vec<JumpRecord>,
}

impl HybridArc {
    /// All samples in hybrid-time order. Each jump contributes its pre-state
    /// (end of a segment) and post-state (start of the next).
    pub fn samples(&self) -> impl Iterator<Item = &HybridSample> {
        self.segments.iter().flat_map(|s| s.samples.iter())
    }

    pub fn final_sample(&self) -> &HybridSample {
        self.segments
            .last()
            .and_then(|s| s.samples.last())
            .expect("an arc has at least one sample")
    }

    pub fn num_jumps(&self) -> usize {
        self.jumps.len()
    }
}

/// `χ⁺ = q_Δ(Kξ)`, `x_p⁺ = x_p`, `τ⁺ = 0`, defined only at `τ = T`.
pub fn jump_map(state: &HybridState, k: &Matrix, delta: &[f64], period: f64) -> Result<HybridState> {
    let n = state.xi.len();
    let nu = delta.len();
    if k.rows() != nu || k.cols() != n || n <= nu {
        return Err(Error::dim("gain, state and step dimensions disagree"));
    }
    if (state.tau - period).abs() > CLOCK_TOLERANCE {
        return Err(Error::input("jump requested away from the sampling instant"));
    }
    let u = k.mul_vec(&state.xi)?;
    let chi = quantize(&u, delta)?;
    let mut xi = state.xi.clone();
    xi[n - nu..].copy_from_slice(&chi);
    Ok(HybridState { xi, tau: 0.0 })
}

/// Simulation horizon and dense-output density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub t_max: f64,
    pub j_max: usize,
    pub samples_per_period: usize,
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon { t_max: 30.0, j_max: usize::MAX, samples_per_period: 50 }
    }
}

struct FlowCache {
    a_cl: Matrix,
    step: f64,
    /// `exp(A_cl · i · step)` for `i = 0..=samples_per_period`.
    full: Vec<Matrix>,
}

impl FlowCache {
    fn new(a_cl: &Matrix, period: f64, spp: usize) -> Result<Self> {
        let step = period / spp as f64;
        let full = (0..=spp)
            .map(|i| linalg::expm(&a_cl.scale(step * i as f64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FlowCache { a_cl: a_cl.clone(), step, full })
    }

    /// Offsets and transition matrices covering `[0, d]`.
    fn offsets(&self, d: f64) -> Result<Vec<(f64, Matrix)>> {
        let spp = self.full.len() - 1;
        let full_len = self.step * spp as f64;
        if (d - full_len).abs() <= CLOCK_TOLERANCE * (1.0 + full_len) {
            return Ok(self.full.iter().enumerate().map(|(i, m)| (self.step * i as f64, m.clone())).collect());
        }
        if d <= 0.0 {
            return Ok(alloc::vec![(0.0, Matrix::identity(self.a_cl.rows()))]);
        }
        let count = libm::ceil(d / self.step - 1e-9).max(1.0) as usize;
        (0..=count)
            .map(|i| {
                let s = d * i as f64 / count as f64;
                Ok((s, linalg::expm(&self.a_cl.scale(s))?))
            })
            .collect()
    }
}

/// Exact simulation of the sampled-data loop: linear flow by matrix
/// exponential between sampling instants, quantized jumps at `τ = T`.
/// Stops at `t_max`; after `j_max` jumps the arc flows until `t_max` or the
/// next sampling instant, whichever comes first.
pub fn simulate(plant: &PlantSpec, k: &Matrix, x0: &HybridState, horizon: &Horizon) -> Result<HybridArc> {
    let n = plant.n();
    let period = plant.period();
    if x0.xi.len() != n {
        return Err(Error::dim("initial state must have n_p + n_u entries"));
    }
    if k.rows() != plant.n_u() || k.cols() != n {
        return Err(Error::dim("gain must be n_u × (n_p + n_u)"));
    }
    if x0.xi.iter().any(|v| !v.is_finite()) || !(x0.tau >= -CLOCK_TOLERANCE && x0.tau <= period + CLOCK_TOLERANCE) {
        return Err(Error::input("initial state must lie in the flow set"));
    }
    if !(horizon.t_max > 0.0) || !horizon.t_max.is_finite() || horizon.samples_per_period == 0 {
        return Err(Error::input("horizon must be positive with at least one sample per period"));
    }
    let cl = build_closed_loop(plant);
    let cache = FlowCache::new(&cl.a_cl, period, horizon.samples_per_period)?;
    let tau0 = x0.tau.clamp(0.0, period);
    let t1 = period - tau0;

    let mut segments = Vec::new();
    let mut jumps = Vec::new();
    let mut xi = x0.xi.clone();
    let mut tau_start = tau0;
    let mut t_start = 0.0;
    let mut j = 0usize;
    loop {
        // next sampling instant, computed without accumulation
        let t_jump = if j == 0 { t1 } else { t1 + j as f64 * period };
        let end = t_jump.min(horizon.t_max);
        let duration = (end - t_start).max(0.0);
        let reaches_jump = t_jump <= horizon.t_max + CLOCK_TOLERANCE;
        let offsets = if reaches_jump && tau_start == 0.0 {
            cache.offsets(period)?
        } else {
            cache.offsets(duration)?
        };
        let mut samples = Vec::with_capacity(offsets.len());
        let last = offsets.len() - 1;
        for (i, (s, phi)) in offsets.iter().enumerate() {
            let state_xi = phi.mul_vec(&xi)?;
            let (t, tau) = if i == last && reaches_jump {
                (t_jump, period)
            } else {
                (t_start + s, (tau_start + s).min(period))
            };
            samples.push(HybridSample { t, j, state: HybridState { xi: state_xi, tau } });
        }
        let end_state = samples[last].state.clone();
        segments.push(FlowSegment { j, t_start, duration: samples[last].t - t_start, samples });
        if !reaches_jump || j >= horizon.j_max {
            break;
        }
        let post = jump_map(&end_state, k, plant.delta(), period)?;
        jumps.push(JumpRecord { t: t_jump, j, pre: end_state, post: post.clone() });
        xi = post.xi;
        tau_start = 0.0;
        t_start = t_jump;
        j += 1;
    }
    Ok(HybridArc { segments, jumps })
}
