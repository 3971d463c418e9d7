//! Local fractal functions built as fixed points of Read–Bajraktarević
//! operators on partitioned domains, with sufficient conditions for
//! membership in Lebesgue, Besov and Triebel–Lizorkin spaces, numerical
//! difference seminorms and the set-valued attractors of local iterated
//! function systems.

// Negated comparisons are how NaN parameters get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod conditions;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod rb;
pub mod seminorm;

pub use error::{Error, Result};
pub use geometry::{AxisBox, Ortho, Partition, Piece, Point, Similitude, ValidationReport};
pub use grid::{Grid, SampledFunction};
pub use rb::{
    evaluate_exact, fixed_point, fixed_point_from, lambda_linearity_check, rb_apply, self_referential_defect,
    sup_contraction_estimate, ExactValue, FunctionKind, FunctionSpec, LinearityCheck, LocalFractalSystem,
    RbOperator, SolveDiagnostics, SolverSettings,
};
