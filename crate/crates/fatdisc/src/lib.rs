//! Numerical toolkit for corank-2 fat distributions on R^6 and horizontal
//! immersions of the unit disc.
//!
//! The crate has three layers:
//!
//! * [`geometry`]: pointwise structure of a distribution
//!   `D = ker(alpha1) ∩ ker(alpha2)` — frames, curvature forms, the
//!   connecting automorphism, fatness tests, Reeb directions, and existence
//!   constraints on the type `(k, n)`.
//! * [`disc`]: piecewise-linear calculus on a triangulated unit disc —
//!   meshes, maps into R^6, pullbacks of the defining forms, admissibility,
//!   and graded sup-norms of finite-difference derivatives.
//! * [`linearized`] and [`solve`]: the horizontality operator
//!   `f -> (f*alpha1, f*alpha2)`, its linearization and elliptic right
//!   inverse, damped Newton continuation, and compactly supported homotopies
//!   that flatten the defect near a point.
//!
//! Binary entry points live in [`cli`]; runnable walkthroughs are under
//! `examples/`.

pub mod cli;
pub mod config;
pub mod disc;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod geometry;
pub mod linearized;
pub mod report;
pub mod solve;

pub use error::{Error, Result};
