//! Piecewise-linear calculus on the unit disc: meshes, maps into R^6,
//! pullbacks, admissibility, and graded norms.

pub mod admissibility;
pub mod map;
pub mod mesh;
pub mod mesh_io;
pub mod norms;

pub use admissibility::{
    admissibility_check, coefficient_fields, AdmissibilityReport, CoefficientFrame, Condition,
    EllipticCoefficients, Violation, ViolationCounts, DEFAULT_ADMISSIBILITY_TOL,
};
pub use map::{pair_sup, ElementSplit, MeshMap, OneFormField};
pub use mesh::{build_disc_mesh, DiscMesh, Point2};
pub use mesh_io::{atomic_write, read_map, resolution_for_nodes, write_map};
pub use norms::{
    derivative_stack, element_to_nodal, graded_norm_elements, graded_norm_forms,
    graded_norm_map_values, graded_norm_nodal, graded_norm_profile, mesh_l2, observed_order,
    recovered_gradient, GradedNorm, MAX_NORM_ORDER,
};
