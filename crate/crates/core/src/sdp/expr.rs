use alloc::vec::Vec;
use core::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymmetricMatrix};

/// Matrix-valued affine function `C + Σ xᵢ Aᵢ` of the scalar parameters.
///
/// Terms are kept sorted by parameter index with at most one entry per index.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMat {
    constant: Matrix,
    terms: Vec<(usize, Matrix)>,
}

impl AffineMat {
    pub(crate) fn from_parts(constant: Matrix, mut terms: Vec<(usize, Matrix)>) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, Matrix)> = Vec::with_capacity(terms.len());
        for (i, m) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 = &last.1 + &m,
                _ => merged.push((i, m)),
            }
        }
        AffineMat { constant, terms: merged }
    }

    pub fn constant(m: Matrix) -> Self {
        AffineMat { constant: m, terms: Vec::new() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        AffineMat::constant(Matrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        AffineMat::constant(Matrix::identity(n))
    }

    pub fn rows(&self) -> usize {
        self.constant.rows()
    }

    pub fn cols(&self) -> usize {
        self.constant.cols()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> &Matrix {
        &self.constant
    }

    pub fn terms(&self) -> &[(usize, Matrix)] {
        &self.terms
    }

    /// Largest referenced parameter index plus one.
    pub fn num_params_used(&self) -> usize {
        self.terms.last().map_or(0, |t| t.0 + 1)
    }

    fn map(&self, f: impl Fn(&Matrix) -> Matrix) -> AffineMat {
        AffineMat {
            constant: f(&self.constant),
            terms: self.terms.iter().map(|(i, m)| (*i, f(m))).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> AffineMat {
        self.map(|m| m.scale(s))
    }

    pub fn transpose(&self) -> AffineMat {
        self.map(Matrix::transpose)
    }

    /// `L · self` for a constant `L`.
    pub fn lmul(&self, l: &Matrix) -> AffineMat {
        self.map(|m| l * m)
    }

    /// `self · R` for a constant `R`.
    pub fn rmul(&self, r: &Matrix) -> AffineMat {
        self.map(|m| m * r)
    }

    /// Product of two affine matrices; at least one factor must be constant.
    pub fn mul(&self, other: &AffineMat) -> Result<AffineMat> {
        if other.is_constant() {
            Ok(self.rmul(&other.constant))
        } else if self.is_constant() {
            Ok(other.lmul(&self.constant))
        } else {
            Err(Error::input("product of two non-constant affine matrices is not affine"))
        }
    }

    /// Affine scalar (1×1) times a constant matrix.
    pub fn times_matrix(&self, m: &Matrix) -> Result<AffineMat> {
        if self.rows() != 1 || self.cols() != 1 {
            return Err(Error::dim("times_matrix expects a 1×1 affine scalar"));
        }
        Ok(AffineMat {
            constant: m.scale(self.constant[(0, 0)]),
            terms: self.terms.iter().map(|(i, c)| (*i, m.scale(c[(0, 0)]))).collect(),
        })
    }

    /// `self + selfᵀ`.
    pub fn he(&self) -> AffineMat {
        self + &self.transpose()
    }

    pub fn add_constant(&self, c: &Matrix) -> AffineMat {
        let mut out = self.clone();
        out.constant = &out.constant + c;
        out
    }

    /// Sub-block of the expression.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> AffineMat {
        self.map(|m| m.block(r0, c0, rows, cols))
    }

    /// Block assembly; every row of the grid must have consistent heights and
    /// every column consistent widths.
    pub fn from_blocks(grid: &[&[&AffineMat]]) -> Result<AffineMat> {
        let consts: Vec<Vec<&Matrix>> =
            grid.iter().map(|row| row.iter().map(|b| &b.constant).collect()).collect();
        let refs: Vec<&[&Matrix]> = consts.iter().map(|r| r.as_slice()).collect();
        let constant = Matrix::from_blocks(&refs)?;
        let (rows, cols) = (constant.rows(), constant.cols());
        let mut terms: Vec<(usize, Matrix)> = Vec::new();
        let mut r0 = 0;
        for row in grid {
            let mut c0 = 0;
            for b in row.iter() {
                for (i, m) in &b.terms {
                    let mut full = Matrix::zeros(rows, cols);
                    full.set_block(r0, c0, m);
                    terms.push((*i, full));
                }
                c0 += b.cols();
            }
            r0 += row[0].rows();
        }
        Ok(AffineMat::from_parts(constant, terms))
    }

    pub fn hstack(parts: &[&AffineMat]) -> Result<AffineMat> {
        AffineMat::from_blocks(&[parts])
    }

    pub fn vstack(parts: &[&AffineMat]) -> Result<AffineMat> {
        let rows: Vec<[&AffineMat; 1]> = parts.iter().map(|p| [*p]).collect();
        let grid: Vec<&[&AffineMat]> = rows.iter().map(|r| r.as_slice()).collect();
        AffineMat::from_blocks(&grid)
    }

    pub fn value(&self, x: &[f64]) -> Result<Matrix> {
        if x.len() < self.num_params_used() {
            return Err(Error::input("assignment does not cover all referenced variables"));
        }
        let mut out = self.constant.clone();
        for (i, m) in &self.terms {
            if x[*i] != 0.0 {
                out = &out + &m.scale(x[*i]);
            }
        }
        Ok(out)
    }

    /// Converts to a symmetric expression after checking symmetry of the
    /// constant and of every coefficient.
    pub fn to_symmetric(&self) -> Result<AffineMatrixExpr> {
        let tol = 1e-12;
        let constant = SymmetricMatrix::from_matrix_checked(&self.constant, tol)?;
        let terms = self
            .terms
            .iter()
            .map(|(i, m)| Ok((*i, SymmetricMatrix::from_matrix_checked(m, tol)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(AffineMatrixExpr { constant, terms })
    }

    /// Symmetric part `(self + selfᵀ)/2`, without any check.
    pub fn sym_part(&self) -> AffineMatrixExpr {
        let constant = SymmetricMatrix::from_matrix_sym(&self.constant).expect("square constant");
        let terms = self
            .terms
            .iter()
            .map(|(i, m)| (*i, SymmetricMatrix::from_matrix_sym(m).expect("square term")))
            .collect();
        AffineMatrixExpr { constant, terms }
    }
}

impl Add for &AffineMat {
    type Output = AffineMat;
    fn add(self, rhs: &AffineMat) -> AffineMat {
        assert!(
            self.rows() == rhs.rows() && self.cols() == rhs.cols(),
            "affine matrix sum of mismatched shapes"
        );
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        AffineMat::from_parts(&self.constant + &rhs.constant, terms)
    }
}

impl Sub for &AffineMat {
    type Output = AffineMat;
    fn sub(self, rhs: &AffineMat) -> AffineMat {
        self + &(-rhs)
    }
}

impl Neg for &AffineMat {
    type Output = AffineMat;
    fn neg(self) -> AffineMat {
        self.scale(-1.0)
    }
}

/// Symmetric affine matrix `C + Σ xᵢ Aᵢ` with symmetric coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMatrixExpr {
    constant: SymmetricMatrix,
    terms: Vec<(usize, SymmetricMatrix)>,
}

impl AffineMatrixExpr {
    pub fn constant(c: SymmetricMatrix) -> Self {
        AffineMatrixExpr { constant: c, terms: Vec::new() }
    }

    /// Builds from a constant and per-parameter coefficients; repeated
    /// indices are summed.
    pub fn new(constant: SymmetricMatrix, terms: Vec<(usize, SymmetricMatrix)>) -> Result<Self> {
        let n = constant.dim();
        if terms.iter().any(|(_, m)| m.dim() != n) {
            return Err(Error::dim("coefficient dimension differs from constant"));
        }
        let mut sorted = terms;
        sorted.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, SymmetricMatrix)> = Vec::with_capacity(sorted.len());
        for (i, m) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1.add_scaled(&m, 1.0),
                _ => merged.push((i, m)),
            }
        }
        Ok(AffineMatrixExpr { constant, terms: merged })
    }

    pub fn dim(&self) -> usize {
        self.constant.dim()
    }

    pub fn constant_term(&self) -> &SymmetricMatrix {
        &self.constant
    }

    pub fn terms(&self) -> &[(usize, SymmetricMatrix)] {
        &self.terms
    }

    pub fn num_params_used(&self) -> usize {
        self.terms.last().map_or(0, |t| t.0 + 1)
    }

    pub fn scale(&self, s: f64) -> Self {
        AffineMatrixExpr {
            constant: self.constant.scale(s),
            terms: self.terms.iter().map(|(i, m)| (*i, m.scale(s))).collect(),
        }
    }

    pub fn add_identity(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.constant.add_identity(s);
        out
    }

    /// Adds `x_index · s · I`.
    pub fn add_scalar_var_identity(&self, index: usize, s: f64) -> Self {
        let mut terms = self.terms.clone();
        terms.push((index, SymmetricMatrix::scaled_identity(self.dim(), s)));
        AffineMatrixExpr::new(self.constant.clone(), terms).expect("same dimension")
    }

    /// `constant + Σ xᵢ·coeffᵢ`.
    pub fn evaluate(&self, x: &[f64]) -> Result<SymmetricMatrix> {
        if x.len() < self.num_params_used() {
            return Err(Error::input("assignment does not cover all referenced variables"));
        }
        let mut out = self.constant.clone();
        for (i, m) in &self.terms {
            out.add_scaled(m, x[*i]);
        }
        Ok(out)
    }
}

/// Free-function form of [`AffineMatrixExpr::evaluate`].
pub fn evaluate(expr: &AffineMatrixExpr, x: &[f64]) -> Result<SymmetricMatrix> {
    expr.evaluate(x)
}
