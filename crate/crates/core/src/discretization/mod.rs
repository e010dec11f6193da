//! Grids, quadrature, finite-difference quotients, Galerkin assembly and the
//! sparse solve.

pub mod assembly;
pub mod fd;
pub mod grid;
pub mod quadrature;
pub mod solver;

pub use assembly::{
    assemble_full, assemble_system, AssemblyFault, AssemblyOptions, CsrMatrix, LinearSystem, Source,
};
pub use fd::{fd_integration_by_parts_check, fd_quotient, IbpResidual, MaskedGridFunction};
pub use grid::{discrete_derivatives, DerivativeFields, Grid, GridFunction, MAX_DERIVATIVE_ORDER};
pub use quadrature::{cell_weight_moments, Cell, CellQuadrature, QuadPoint};
pub use solver::{
    gmres, solve_system, solve_system_with_stats, Ilu0, SolveStats, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
