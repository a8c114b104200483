//! Problem instance, uniform quantizer, Krasovskii regularization of the
//! quantization error and the closed-loop block matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::math;

/// Continuous-time plant `ẋ_p = A_p x_p + B_p u` with per-channel quantizer
/// steps `delta` and sampling period `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantSpec {
    a_p: Matrix,
    b_p: Matrix,
    delta: Vec<f64>,
    t: f64,
}

impl PlantSpec {
    pub fn new(a_p: Matrix, b_p: Matrix, delta: Vec<f64>, t: f64) -> Result<Self> {
        if !a_p.is_square() {
            return Err(Error::dim("A_p must be square"));
        }
        if b_p.rows() != a_p.rows() {
            return Err(Error::dim("B_p must have as many rows as A_p"));
        }
        if b_p.cols() == 0 || a_p.rows() == 0 {
            return Err(Error::dim("empty state or input space"));
        }
        if delta.len() != b_p.cols() {
            return Err(Error::dim("one quantization step per input channel"));
        }
        if delta.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::input("quantization steps must be positive"));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::input("sampling period must be positive"));
        }
        Ok(PlantSpec { a_p, b_p, delta, t })
    }

    /// Harmonic oscillator with unit quantization step and period 0.5.
    pub fn oscillator_example() -> Self {
        PlantSpec::new(
            Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]),
            Matrix::from_rows(&[[0.0], [1.0]]),
            vec![1.0],
            0.5,
        )
        .expect("valid example")
    }

    pub fn n_p(&self) -> usize {
        self.a_p.rows()
    }

    pub fn n_u(&self) -> usize {
        self.b_p.cols()
    }

    /// Dimension of the hybrid state without the clock, `n_p + n_u`.
    pub fn n(&self) -> usize {
        self.n_p() + self.n_u()
    }

    pub fn a_p(&self) -> &Matrix {
        &self.a_p
    }

    pub fn b_p(&self) -> &Matrix {
        &self.b_p
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn period(&self) -> f64 {
        self.t
    }

    pub fn discretize(&self) -> Result<(Matrix, Matrix)> {
        linalg::discretize(&self.a_p, &self.b_p, self.t)
    }
}

/// Flow and jump matrices of the sampled-data loop on `ξ = (x_p, χ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopMatrices {
    pub a_cl: Matrix,
    pub g_cl: Matrix,
    pub j_cl: Matrix,
}

pub fn build_closed_loop(plant: &PlantSpec) -> ClosedLoopMatrices {
    let (np, nu) = (plant.n_p(), plant.n_u());
    let n = np + nu;
    let mut a_cl = Matrix::zeros(n, n);
    a_cl.set_block(0, 0, plant.a_p());
    a_cl.set_block(0, np, plant.b_p());
    let mut g_cl = Matrix::zeros(n, n);
    g_cl.set_block(0, 0, &Matrix::identity(np));
    let mut j_cl = Matrix::zeros(n, nu);
    j_cl.set_block(np, 0, &Matrix::identity(nu));
    ClosedLoopMatrices { a_cl, g_cl, j_cl }
}

fn check_lengths(u: &[f64], delta: &[f64]) -> Result<()> {
    if u.len() != delta.len() {
        return Err(Error::dim("input and step vectors differ in length"));
    }
    Ok(())
}

fn q_scalar(v: f64, d: f64) -> f64 {
    let k = math::floor(v.abs() / d);
    if v < 0.0 {
        -d * k
    } else {
        d * k
    }
}

/// Uniform quantizer `δᵢ·Sign(uᵢ)·⌊|uᵢ|/δᵢ⌋`, channel by channel.
pub fn quantize(u: &[f64], delta: &[f64]) -> Result<Vec<f64>> {
    check_lengths(u, delta)?;
    Ok(u.iter().zip(delta).map(|(&v, &d)| q_scalar(v, d)).collect())
}

/// Quantization error `q(u) − u`.
pub fn psi(u: &[f64], delta: &[f64]) -> Result<Vec<f64>> {
    check_lengths(u, delta)?;
    Ok(u.iter().zip(delta).map(|(&v, &d)| q_scalar(v, d) - v).collect())
}

/// Value set of one coordinate of the regularized error map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KrasovskiiSet {
    Single(f64),
    /// Both one-sided limits, lower first.
    Pair(f64, f64),
}

impl KrasovskiiSet {
    pub fn elements(&self) -> Vec<f64> {
        match *self {
            KrasovskiiSet::Single(a) => vec![a],
            KrasovskiiSet::Pair(a, b) => vec![a, b],
        }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.elements().iter().any(|e| (e - v).abs() <= tol)
    }
}

/// Per-coordinate value sets of the Krasovskii-regularized error map.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantSetValue {
    pub coords: Vec<KrasovskiiSet>,
}

impl QuantSetValue {
    /// Every vector of the cartesian product of the coordinate sets.
    pub fn selections(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for c in &self.coords {
            let els = c.elements();
            let mut next = Vec::with_capacity(out.len() * els.len());
            for prefix in &out {
                for &e in &els {
                    let mut p = prefix.clone();
                    p.push(e);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.coords.len()
            && self.coords.iter().zip(v).all(|(c, &x)| c.contains(x, tol))
    }
}

/// Relative tolerance used to decide that `uᵢ/δᵢ` lies on the lattice.
pub const LATTICE_TOLERANCE: f64 = 1e-12;

pub fn psi_kras(u: &[f64], delta: &[f64]) -> Result<QuantSetValue> {
    check_lengths(u, delta)?;
    let coords = u
        .iter()
        .zip(delta)
        .map(|(&v, &d)| {
            let r = v / d;
            let k = math::round(r);
            let on_lattice = (r - k).abs() <= LATTICE_TOLERANCE * r.abs().max(1.0);
            if v != 0.0 && k != 0.0 && on_lattice {
                // one-sided limits of q(w) − w as w → kδ
                if k > 0.0 {
                    KrasovskiiSet::Pair(-d, 0.0)
                } else {
                    KrasovskiiSet::Pair(0.0, d)
                }
            } else {
                KrasovskiiSet::Single(q_scalar(v, d) - v)
            }
        })
        .collect();
    Ok(QuantSetValue { coords })
}

/// Left-hand sides of both sector inequalities and whether each is `≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorCheck {
    pub holds1: bool,
    pub holds2: bool,
    /// `vᵀS₁v − ΔᵀS₁Δ`.
    pub residual1: f64,
    /// `vᵀS₂(v + u)`.
    pub residual2: f64,
}

/// Absolute slack allowed when reporting the sector flags.
pub const SECTOR_TOLERANCE: f64 = 1e-12;

/// Evaluates both sector inequalities for diagonal multipliers given by their
/// diagonals.
pub fn sector_check(u: &[f64], v: &[f64], s1: &[f64], s2: &[f64], delta: &[f64]) -> Result<SectorCheck> {
    let m = delta.len();
    if u.len() != m || v.len() != m || s1.len() != m || s2.len() != m {
        return Err(Error::dim("sector check vectors differ in length"));
    }
    if s1.iter().chain(s2).any(|s| !(*s > 0.0)) {
        return Err(Error::input("sector multipliers must have a positive diagonal"));
    }
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    for i in 0..m {
        r1 += s1[i] * (v[i] * v[i] - delta[i] * delta[i]);
        r2 += s2[i] * v[i] * (v[i] + u[i]);
    }
    let scale1 = 1.0 + (0..m).map(|i| s1[i] * delta[i] * delta[i]).sum::<f64>();
    let scale2 = 1.0 + (0..m).map(|i| s2[i] * v[i].abs() * (v[i].abs() + u[i].abs())).sum::<f64>();
    Ok(SectorCheck {
        holds1: r1 <= SECTOR_TOLERANCE * scale1,
        holds2: r2 <= SECTOR_TOLERANCE * scale2,
        residual1: r1,
        residual2: r2,
    })
}

/// Sector check with full multiplier matrices that must be diagonal.
pub fn sector_check_matrices(
    u: &[f64],
    v: &[f64],
    s1: &crate::SymmetricMatrix,
    s2: &crate::SymmetricMatrix,
    delta: &[f64],
) -> Result<SectorCheck> {
    if !s1.is_diagonal() || !s2.is_diagonal() {
        return Err(Error::input("sector multipliers must be diagonal"));
    }
    sector_check(u, v, &s1.diagonal(), &s2.diagonal(), delta)
}

/// Tolerance on `|λ|` below which a mode counts as Schur stable.
const PBH_UNIT_TOLERANCE: f64 = 1e-10;

/// PBH test on the modes of `A_D` on or outside the unit circle.
pub fn check_stabilizable(a_d: &Matrix, b_d: &Matrix) -> Result<bool> {
    if !a_d.is_square() || b_d.rows() != a_d.rows() {
        return Err(Error::dim("stabilizability expects A n×n and B n×m"));
    }
    let n = a_d.rows();
    let m = b_d.cols();
    for (re, im) in linalg::eigenvalues(a_d)? {
        if math::hypot(re, im) < 1.0 - PBH_UNIT_TOLERANCE {
            continue;
        }
        let rank = if im == 0.0 {
            let mut h = Matrix::zeros(n, n + m);
            h.set_block(0, 0, &(&Matrix::identity(n).scale(re) - a_d));
            h.set_block(0, n, b_d);
            linalg::rank_svd(&h, linalg::RANK_TOLERANCE)
        } else {
            // [[Re, −Im], [Im, Re]] embedding of the complex PBH matrix
            let re_part = &Matrix::identity(n).scale(re) - a_d;
            let im_part = Matrix::identity(n).scale(im);
            let mut h = Matrix::zeros(2 * n, 2 * (n + m));
            h.set_block(0, 0, &re_part);
            h.set_block(0, n, b_d);
            h.set_block(0, n + m, &-&im_part);
            h.set_block(n, 0, &im_part);
            h.set_block(n, n + m, &re_part);
            h.set_block(n, 2 * n + m, b_d);
            linalg::rank_svd(&h, linalg::RANK_TOLERANCE) / 2
        };
        if rank < n {
            return Ok(false);
        }
    }
    Ok(true)
}
