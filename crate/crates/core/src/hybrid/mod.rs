//! Exact simulation of the sampled-data loop as a hybrid system with a clock,
//! Lyapunov checks along solutions, and attractor geometry.

mod attractor;
mod lyapunov;
mod sim;

pub use attractor::{
    attractor_boundary, attractor_membership, attractor_outer_radius, attractor_value, boundary_radius_at, varpi,
    AttractorConvention, BoundarySample,
};
pub use lyapunov::{
    certify_arc, jump_decay, jump_sector_residual, lyapunov_value, observed_jump_decay, upsilon_bound,
    ArcCertificate, JumpDecay, LyapunovDesign, FLOW_TOLERANCE, INVARIANCE_TOLERANCE, JUMP_ROUNDOFF,
};
pub use sim::{
    jump_map, simulate, FlowSegment, HybridArc, HybridSample, HybridState, Horizon, JumpRecord, CLOCK_TOLERANCE,
};
