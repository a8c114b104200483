//! Dense real linear algebra for the small matrices appearing in the
//! certificates: exponentials, factorizations and eigenvalue routines.

mod decomp;
mod expm;
mod matrix;

pub use decomp::{
    cholesky, definiteness_margin, eigenvalues, inverse, lambda_max, lambda_min, rank_svd,
    singular_values, spd_inverse, spectral_radius, sym_eig, sym_eig_with_tol, Lu, SymEigen,
    JACOBI_TOLERANCE, RANK_TOLERANCE,
};
pub(crate) use decomp::{cholesky_solve, lower_triangular_inverse};
pub use expm::{discretize, expm};
pub use matrix::{Matrix, SymmetricMatrix};
