use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::expr::AffineMat;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymmetricMatrix};

/// Shape of a decision block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Scalar,
    /// Free symmetric matrix, parametrized by its lower triangle (row-major).
    Symmetric(usize),
    /// Diagonal matrix, parametrized by its diagonal.
    Diagonal(usize),
    /// Free `rows × cols` matrix, row-major.
    Rect(usize, usize),
}

impl BlockKind {
    pub fn num_params(&self) -> usize {
        match *self {
            BlockKind::Scalar => 1,
            BlockKind::Symmetric(n) => n * (n + 1) / 2,
            BlockKind::Diagonal(n) => n,
            BlockKind::Rect(r, c) => r * c,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match *self {
            BlockKind::Scalar => (1, 1),
            BlockKind::Symmetric(n) | BlockKind::Diagonal(n) => (n, n),
            BlockKind::Rect(r, c) => (r, c),
        }
    }
}

/// Handle to a block of a [`VarSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub(crate) usize);

#[derive(Debug, Clone, PartialEq)]
pub struct VarBlock {
    pub name: String,
    pub kind: BlockKind,
    /// Index of the first scalar parameter.
    pub offset: usize,
    /// Elementwise bounds applied to every parameter of the block.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Ordered collection of named decision blocks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarSpace {
    blocks: Vec<VarBlock>,
    len: usize,
}

impl VarSpace {
    pub fn new() -> Self {
        VarSpace::default()
    }

    pub fn add(&mut self, name: &str, kind: BlockKind) -> Result<VarId> {
        self.add_bounded(name, kind, None, None)
    }

    pub fn add_bounded(
        &mut self,
        name: &str,
        kind: BlockKind,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Result<VarId> {
        if self.blocks.iter().any(|b| b.name == name) {
            return Err(Error::input(format!("duplicate variable name `{name}`")));
        }
        if kind.num_params() == 0 {
            return Err(Error::dim(format!("variable `{name}` has no parameters")));
        }
        check_bounds(name, lower, upper)?;
        let id = VarId(self.blocks.len());
        self.blocks.push(VarBlock { name: name.into(), kind, offset: self.len, lower, upper });
        self.len += kind.num_params();
        Ok(id)
    }

    pub fn set_bounds(&mut self, id: VarId, lower: Option<f64>, upper: Option<f64>) -> Result<()> {
        let b = &mut self.blocks[id.0];
        check_bounds(&b.name, lower, upper)?;
        b.lower = lower;
        b.upper = upper;
        Ok(())
    }

    /// Total number of scalar parameters.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn blocks(&self) -> &[VarBlock] {
        &self.blocks
    }

    pub fn block(&self, id: VarId) -> &VarBlock {
        &self.blocks[id.0]
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.blocks.iter().position(|b| b.name == name).map(VarId)
    }

    /// Bounds of scalar parameter `i`.
    pub fn param_bounds(&self, i: usize) -> (Option<f64>, Option<f64>) {
        let b = self
            .blocks
            .iter()
            .find(|b| i >= b.offset && i < b.offset + b.kind.num_params())
            .expect("parameter index in range");
        (b.lower, b.upper)
    }

    /// The block as an affine matrix in the parameters.
    pub fn var(&self, id: VarId) -> AffineMat {
        let b = self.block(id);
        let (r, c) = b.kind.shape();
        let mut terms = Vec::with_capacity(b.kind.num_params());
        let mut idx = b.offset;
        match b.kind {
            BlockKind::Scalar => {
                terms.push((idx, Matrix::identity(1)));
            }
            BlockKind::Symmetric(n) => {
                for i in 0..n {
                    for j in 0..=i {
                        let mut e = Matrix::zeros(n, n);
                        e[(i, j)] = 1.0;
                        e[(j, i)] = 1.0;
                        terms.push((idx, e));
                        idx += 1;
                    }
                }
            }
            BlockKind::Diagonal(n) => {
                for i in 0..n {
                    let mut e = Matrix::zeros(n, n);
                    e[(i, i)] = 1.0;
                    terms.push((idx, e));
                    idx += 1;
                }
            }
            BlockKind::Rect(rows, cols) => {
                for i in 0..rows {
                    for j in 0..cols {
                        let mut e = Matrix::zeros(rows, cols);
                        e[(i, j)] = 1.0;
                        terms.push((idx, e));
                        idx += 1;
                    }
                }
            }
        }
        AffineMat::from_parts(Matrix::zeros(r, c), terms)
    }

    fn params<'a>(&self, id: VarId, x: &'a [f64]) -> Result<&'a [f64]> {
        let b = self.block(id);
        x.get(b.offset..b.offset + b.kind.num_params())
            .ok_or_else(|| Error::input(format!("assignment does not cover `{}`", b.name)))
    }

    pub fn value_scalar(&self, id: VarId, x: &[f64]) -> Result<f64> {
        Ok(self.params(id, x)?[0])
    }

    /// Value of a block as a dense matrix.
    pub fn value_matrix(&self, id: VarId, x: &[f64]) -> Result<Matrix> {
        let p = self.params(id, x)?;
        let b = self.block(id);
        Ok(match b.kind {
            BlockKind::Scalar => Matrix::from_row_major(1, 1, p.to_vec())?,
            BlockKind::Symmetric(n) => {
                let mut m = Matrix::zeros(n, n);
                let mut k = 0;
                for i in 0..n {
                    for j in 0..=i {
                        m[(i, j)] = p[k];
                        m[(j, i)] = p[k];
                        k += 1;
                    }
                }
                m
            }
            BlockKind::Diagonal(_) => Matrix::diag(p),
            BlockKind::Rect(r, c) => Matrix::from_row_major(r, c, p.to_vec())?,
        })
    }

    pub fn value_symmetric(&self, id: VarId, x: &[f64]) -> Result<SymmetricMatrix> {
        match self.block(id).kind {
            BlockKind::Rect(..) => Err(Error::input("rectangular block is not symmetric")),
            _ => SymmetricMatrix::from_matrix_sym(&self.value_matrix(id, x)?),
        }
    }

    /// Writes `value` into the parameters of block `id`.
    pub fn set_value(&self, id: VarId, value: &Matrix, x: &mut [f64]) -> Result<()> {
        let b = self.block(id);
        if value.rows() != b.kind.shape().0 || value.cols() != b.kind.shape().1 {
            return Err(Error::dim(format!("value shape for `{}`", b.name)));
        }
        if x.len() < b.offset + b.kind.num_params() {
            return Err(Error::dim("assignment vector too short"));
        }
        let mut k = b.offset;
        match b.kind {
            BlockKind::Scalar => x[k] = value[(0, 0)],
            BlockKind::Symmetric(n) => {
                for i in 0..n {
                    for j in 0..=i {
                        x[k] = 0.5 * (value[(i, j)] + value[(j, i)]);
                        k += 1;
                    }
                }
            }
            BlockKind::Diagonal(n) => {
                for i in 0..n {
                    x[k + i] = value[(i, i)];
                }
            }
            BlockKind::Rect(..) => x[k..k + value.as_slice().len()].copy_from_slice(value.as_slice()),
        }
        Ok(())
    }

    pub fn set_scalar(&self, id: VarId, value: f64, x: &mut [f64]) -> Result<()> {
        self.set_value(id, &Matrix::from_rows(&[[value]]), x)
    }
}

fn check_bounds(name: &str, lower: Option<f64>, upper: Option<f64>) -> Result<()> {
    if lower.is_some_and(|l| !l.is_finite()) || upper.is_some_and(|u| !u.is_finite()) {
        return Err(Error::input(format!("bounds of `{name}` must be finite")));
    }
    if let (Some(l), Some(u)) = (lower, upper) {
        if !(l < u) {
            return Err(Error::input(format!("empty bound interval for `{name}`")));
        }
    }
    Ok(())
}
