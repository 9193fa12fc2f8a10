//! Pointwise geometry of corank-2 distributions on R^6.

pub mod distribution;
pub mod fat_type;
pub mod form;
pub mod model;

pub use distribution::{
    acs_from_gram, bracket_step_two, check_reeb_directions, compatible_acs, fatness_via_phi,
    is_fat_at, kernel_basis, kernel_basis_with_rule, symplectic_complement, BracketReport,
    CorankTwoDistribution, DistributionFrame, FatnessReport, FormIndex, PivotRule, ReebReport,
    DEFAULT_FAT_TOL,
};
pub use fat_type::{check_type_constraints, radon_hurwitz, TypeCheck, TypeConstraint};
pub use form::{
    constant_field, constant_form, exterior_derivative, lie_bracket, two_form_eval, OneForm,
    Point6, VectorField, DEFAULT_FD_STEP,
};
pub use model::{
    complex_heisenberg_constants, from_structure_constants, holomorphic_contact_model,
    integrable_pair, model_frame_fields, partially_flat_pair, RemainderFn, IX1, IX2, IY1, IY2,
    IZ1, IZ2,
};
