//! The linearized horizontality operator and its right inverse: forward
//! application, elimination to a scalar elliptic problem, the banded
//! Dirichlet solve, and pointwise reconstruction.

pub mod band;
pub mod dirichlet;
pub mod eliminate;
pub mod inverse;
pub mod operator;
pub mod section;

pub use band::{BandLu, BandMatrix};
pub use dirichlet::{
    solve_reduced_dirichlet, ReducedSolution, ReducedSolver, SolveDiagnostics,
};
pub use eliminate::{eliminate_to_scalar, symbol_has_real_zero, ReducedProblem};
pub use inverse::{
    random_smooth_section, reconstruct_section, right_inverse, right_inverse_from,
    tame_estimate_probe, InverseSolution,
};
pub use operator::apply_linearization;
pub use section::{section_norm, BoundaryData, BoundaryMode, SectionAlongMap};
