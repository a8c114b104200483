use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::expr::{AffineMat, AffineMatrixExpr};
use super::space::{VarId, VarSpace};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymmetricMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Direction of a matrix inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmiSense {
    /// `expr ⪯ −margin·I`.
    NegativeSemidefinite,
    /// `expr ⪰ margin·I`.
    PositiveSemidefinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmiConstraint {
    pub name: String,
    pub expr: AffineMatrixExpr,
    pub sense: LmiSense,
    pub margin: f64,
}

impl LmiConstraint {
    /// Achieved margin: `−λ_max(expr)` or `λ_min(expr)` depending on sense.
    pub fn achieved(&self, x: &[f64]) -> Result<f64> {
        let v = self.expr.evaluate(x)?;
        Ok(match self.sense {
            LmiSense::NegativeSemidefinite => -linalg::lambda_max(&v),
            LmiSense::PositiveSemidefinite => linalg::lambda_min(&v),
        })
    }

    /// The constraint written as `F(x) ⪰ 0`.
    pub(crate) fn as_psd(&self) -> AffineMatrixExpr {
        match self.sense {
            LmiSense::NegativeSemidefinite => self.expr.scale(-1.0).add_identity(-self.margin),
            LmiSense::PositiveSemidefinite => self.expr.add_identity(-self.margin),
        }
    }
}

/// Linear objective over matrix-inequality constraints in the parameters of a
/// [`VarSpace`]. Scalar inequalities are stored as 1×1 constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub(crate) space: VarSpace,
    pub(crate) sense: Sense,
    pub(crate) objective: Vec<f64>,
    pub(crate) objective_constant: f64,
    pub(crate) constraints: Vec<LmiConstraint>,
    pub(crate) scalar_constraints: Vec<LmiConstraint>,
}

impl SdpProblem {
    pub fn new(space: VarSpace) -> Self {
        let n = space.len();
        SdpProblem {
            space,
            sense: Sense::Minimize,
            objective: vec![0.0; n],
            objective_constant: 0.0,
            constraints: Vec::new(),
            scalar_constraints: Vec::new(),
        }
    }

    pub fn space(&self) -> &VarSpace {
        &self.space
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn constraints(&self) -> &[LmiConstraint] {
        &self.constraints
    }

    pub fn scalar_constraints(&self) -> &[LmiConstraint] {
        &self.scalar_constraints
    }

    fn set_objective(&mut self, sense: Sense, f: &AffineMat) -> Result<()> {
        if f.rows() != 1 || f.cols() != 1 {
            return Err(Error::dim("objective must be a 1×1 affine expression"));
        }
        self.check_params(f.num_params_used())?;
        self.sense = sense;
        self.objective = vec![0.0; self.space.len()];
        for (i, m) in f.terms() {
            self.objective[*i] = m[(0, 0)];
        }
        self.objective_constant = f.constant_term()[(0, 0)];
        Ok(())
    }

    pub fn minimize(&mut self, f: &AffineMat) -> Result<()> {
        self.set_objective(Sense::Minimize, f)
    }

    pub fn maximize(&mut self, f: &AffineMat) -> Result<()> {
        self.set_objective(Sense::Maximize, f)
    }

    /// Objective value at `x` in the problem's own sense.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    fn check_params(&self, used: usize) -> Result<()> {
        if used > self.space.len() {
            return Err(Error::input("expression references an undeclared variable"));
        }
        Ok(())
    }

    pub fn add_lmi(
        &mut self,
        name: &str,
        expr: AffineMatrixExpr,
        sense: LmiSense,
        margin: f64,
    ) -> Result<()> {
        self.check_params(expr.num_params_used())?;
        if !(margin >= 0.0) {
            return Err(Error::input("constraint margins must be nonnegative"));
        }
        self.constraints.push(LmiConstraint { name: name.into(), expr, sense, margin });
        Ok(())
    }

    /// `expr ⪯ −margin·I`.
    pub fn add_nsd(&mut self, name: &str, expr: &AffineMat, margin: f64) -> Result<()> {
        self.add_lmi(name, expr.to_symmetric()?, LmiSense::NegativeSemidefinite, margin)
    }

    /// `expr ⪰ margin·I`.
    pub fn add_psd(&mut self, name: &str, expr: &AffineMat, margin: f64) -> Result<()> {
        self.add_lmi(name, expr.to_symmetric()?, LmiSense::PositiveSemidefinite, margin)
    }

    fn add_scalar(&mut self, name: &str, f: &AffineMat, sense: LmiSense) -> Result<()> {
        if f.rows() != 1 || f.cols() != 1 {
            return Err(Error::dim("scalar constraint must be 1×1"));
        }
        let expr = f.to_symmetric()?;
        self.check_params(expr.num_params_used())?;
        self.scalar_constraints.push(LmiConstraint { name: name.into(), expr, sense, margin: 0.0 });
        Ok(())
    }

    /// `f ≤ 0`.
    pub fn add_scalar_le(&mut self, name: &str, f: &AffineMat) -> Result<()> {
        self.add_scalar(name, f, LmiSense::NegativeSemidefinite)
    }

    /// `f ≥ 0`.
    pub fn add_scalar_ge(&mut self, name: &str, f: &AffineMat) -> Result<()> {
        self.add_scalar(name, f, LmiSense::PositiveSemidefinite)
    }

    pub(crate) fn all_constraints(&self) -> impl Iterator<Item = &LmiConstraint> {
        self.constraints.iter().chain(self.scalar_constraints.iter())
    }

    /// Achieved margins of all constraints (matrix constraints first).
    pub fn margins(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.all_constraints().map(|c| c.achieved(x)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

/// Output of [`super::solve`] and [`super::feasibility`].
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Parameter assignment (best iterate when not optimal).
    pub x: Vec<f64>,
    /// Objective value in the problem's sense.
    pub objective: f64,
    /// Relative duality gap at the returned iterate.
    pub gap: f64,
    /// Lower (minimize) or upper (maximize) bound from the dual iterate.
    pub dual_bound: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Achieved margin of every constraint, matrix constraints first.
    pub margins: Vec<f64>,
    /// Residual phase-I shift.
    pub shift: f64,
    /// Largest uniform slack, reported by [`super::feasibility`].
    pub feasibility_margin: Option<f64>,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn scalar(&self, space: &VarSpace, id: VarId) -> f64 {
        space.value_scalar(id, &self.x).expect("solution covers the space")
    }

    pub fn matrix(&self, space: &VarSpace, id: VarId) -> Matrix {
        space.value_matrix(id, &self.x).expect("solution covers the space")
    }

    pub fn symmetric(&self, space: &VarSpace, id: VarId) -> SymmetricMatrix {
        space.value_symmetric(id, &self.x).expect("symmetric block")
    }

    /// `Ok(self)` when optimal, otherwise the matching error.
    pub fn into_result(self) -> Result<SdpSolution> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::Infeasible => Err(Error::Infeasible("semidefinite program".into())),
            s => Err(Error::Solver(s)),
        }
    }
}
