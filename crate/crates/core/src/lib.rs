//! Treats an attributed dataset as a finite topological space and evaluates
//! a model's per-subpopulation performance with presheaf-valued statistics.
//!
//! The pipeline is:
//!
//! 1. [`model`]: parse a dataset and a predictions file, join them into an
//!    [`EvaluationContext`].
//! 2. [`topology`]: turn labels / attributes / scalar thresholds into a
//!    subbasis and materialize a bounded, deduplicated topology.
//! 3. [`presheaf`]: evaluate a statistic on every open set.
//! 4. [`analysis`]: restriction differences, local k-bounded inconsistency,
//!    neighborhood extrema and rankings.

pub mod analysis;
pub mod bitset;
mod error;
pub mod model;
pub mod presheaf;
pub mod topology;

pub use error::{Error, Result};
pub use model::{join_validate, parse_dataset, parse_predictions, Dataset, EvaluationContext, PredictionTable, SchemaDescriptor};
pub use presheaf::{compute_assignment, Assignment, PresheafSpec, StatKind, Statistic, StatisticRegistry};
pub use topology::{build_subbasis, GenerationConfig, OsId, SetExpr, Subbasis, SubbasisSpec, Topology};
