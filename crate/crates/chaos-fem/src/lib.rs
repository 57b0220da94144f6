//! Polynomial chaos Galerkin finite elements for the 1D elliptic problem
//! -(k(x, y) u')' = f(x, y) on [0, 1] with zero Dirichlet data, where the
//! coefficient and forcing depend on a vector y of independent standard
//! Gaussian variables.
//!
//! The Galerkin system over the product basis (hat function) x (chaos
//! polynomial) is never formed entry by entry. Expectations are replaced by
//! Monte Carlo averages over samples y^(1), ..., y^(S), which factors the
//! system matrix as
//!
//! ```text
//!   A = (1/S) V^T diag(A(y^(1)), ..., A(y^(S))) V,    V = Z (x) I,
//! ```
//!
//! where A(y^(r)) is the deterministic stiffness matrix at sample r and Z
//! holds the chaos basis evaluated at the samples. The solver works
//! matrix-free through this factorization. One code path then covers
//! classical Monte Carlo (degree-zero chaos or a Lagrange basis on the
//! samples themselves), stochastic collocation (Gauss nodes as samples with
//! quadrature weights), and the full coupled chaos Galerkin method.

pub mod basis;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod field;
pub mod operator;
pub mod solver;

#[cfg(test)]
mod testutil;

pub use basis::{
    collocation_grid, gauss_hermite, hermite, hermite_all, tensor_indices, total_degree_indices,
    ChaosBasis, MultiIndex,
};
pub use error::{Error, Result};
pub use experiments::{
    case1_model, case2_model, classical_mc_mean, coefficient_convergence, error_h1, error_l2,
    nodal_interpolant, run_table, solve_chaos, CoefficientCurves, CurveSet, ErrorReport,
    ExperimentConfig, MeanFn, Norms, ReportRow, SolveOptions, TestCase,
};
pub use fem::{
    assemble_load, assemble_mass, assemble_stiffness, Mesh1D, NodalVector, TridiagonalMatrix,
};
pub use field::{CoefficientModel, ForcingModel, SampleSet, TermProfile};
pub use operator::{
    assemble_rhs, assemble_rhs_weighted, ChaosSolution, ChaosVector, KroneckerChaosOperator,
};
pub use solver::{conjugate_gradient, Breakdown, CgOptions, CgReport};
