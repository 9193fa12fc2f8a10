//! Nonlinear horizontality: damped-Newton inversion, cutoff data, and the
//! compactly supported defect-straightening homotopy.

pub mod cutoff;
pub mod homotopy;
pub mod newton;

pub use cutoff::{
    cutoff_profile, infinitesimal_order, make_cutoff, CutoffField, ORDER_ABS_FLOOR,
    ORDER_REL_TOL,
};
pub use homotopy::{homotopy_family, HomotopyResult, HomotopyStep};
pub use newton::{
    horizontality_residual, newton_invert, NewtonLog, NewtonOutcome, NewtonStatus,
    SolveOptions, AUTO_TARGET_FACTOR,
};
