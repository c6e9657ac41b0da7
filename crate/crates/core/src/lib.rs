//! Implicit L1 finite-difference solver for the Caputo time-fractional
//! diffusion equation on non-uniform time meshes.

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod analytic;
pub mod caputo;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod quadrature;
pub mod scheme;
pub mod types;

pub use adaptive::{CurvaturePolicy, Schedule, StepSizeController, TimestepPolicy};
pub use error::{Error, Result};
pub use scheme::{run, RunOptions, RunOutput, RunSummary, SchemeKind, StepReport};
pub use types::{
    make_grid, Impulse, Interval, ProblemSpec, SolutionHistory, SpatialGrid, TemporalMesh,
};
pub use analytic::{point_source_exact, propagator, Limit, ManufacturedProblem};
pub use harness::{CriterionOutcome, ExperimentResult};
