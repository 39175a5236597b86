//! Limit load and strength reduction analysis of convex variational models.
//!
//! Models are convex potentials whose gradients are internal forces. The
//! limit load factor and the strength reduction factor are computed by
//! indirect continuation, which prescribes the work of the external load
//! instead of the load itself.

pub mod analytic;
pub mod continuation;
pub mod error;
pub mod fem;
pub mod limitanalysis;
pub mod linalg;
pub mod potential;
pub mod solver;

pub use continuation::{ContinuationTrace, ScheduleOptions, StopReason, TraceRecord};
pub use error::{AnalysisError, ModelError};
pub use potential::{model_at, Extended, LoadVector, ParamFamily, Potential};
pub use solver::{NewtonOptions, SolveOutcome};
