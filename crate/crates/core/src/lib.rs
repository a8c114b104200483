//! Synthesis and verification of sampled-data state-feedback controllers for
//! continuous-time linear plants driven through uniformly quantized actuators.
//!
//! The closed loop is modelled as a hybrid system with a sampling clock. A
//! controller gain is certified when a set of matrix inequalities holds; the
//! certificate yields a compact attractor around the origin that is uniformly
//! globally asymptotically stable. The crate provides:
//!
//! * [`linalg`]: dense kernels (matrix exponential, symmetric eigensolver, ...).
//! * [`plant`]: the problem instance, the quantizer and its set-valued
//!   regularization, sector conditions and stabilizability.
//! * [`sdp`]: affine matrix expressions and a primal-dual interior-point solver.
//! * [`synthesis`]: certificates, the feasibility bootstrap and the
//!   convex-concave design loop.
//! * [`hybrid`]: exact simulation of the hybrid closed loop, Lyapunov
//!   certification along arcs and attractor geometry.
//!
//! The crate is `no_std` and only needs an allocator.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub(crate) mod math;

pub mod hybrid;
pub mod linalg;
pub mod plant;
pub mod sdp;
pub mod synthesis;

pub use error::{Error, Result};
pub use linalg::{Matrix, SymmetricMatrix};
pub use plant::{ClosedLoopMatrices, PlantSpec};
