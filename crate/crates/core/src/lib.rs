//! Personalized lab-exercise tooling.
//!
//! The crate covers the whole offline pipeline: deriving a per-student seed,
//! drawing constrained personalization values, emitting provisioning variable
//! files, grading submissions against a task-dependency graph, keeping an
//! append-only event log, and mining that log for signs of answer sharing.
//! The HTTP service and the CLI live in sibling crates and only add transport
//! and persistence on top of these types.

pub mod audit;
pub mod detect;
pub mod dictionary;
pub mod error;
pub mod eventlog;
pub mod exercise;
pub mod genconfig;
pub mod generate;
pub mod grading;
pub mod provision;
pub mod rng;
pub mod sampling;
pub mod seed;
pub mod timefmt;

pub use error::{Error, Result};
pub use eventlog::{Event, EventLog, ExerciseState, LogEntry};
pub use exercise::{AnswerMode, ExerciseDef, TaskDef};
pub use genconfig::{AnswerBinding, GenerationConfig, VariableKind, VariableSpec};
pub use generate::{generate_values, generate_values_at, ValueAssignment};
pub use grading::{AnswerRegistration, StudentState, SubmissionRecord, Verdict};
pub use seed::{derive_seed, Seed};

/// Version string stamped into emitted files.
pub const GENERATOR_VERSION: &str = concat!("labforge ", env!("CARGO_PKG_VERSION"));
