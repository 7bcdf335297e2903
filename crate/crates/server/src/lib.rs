//! Submission service: registration intake from generators, student
//! submissions, and instructor access to the event log.

pub mod api;
pub mod config;
pub mod roster;
pub mod store;

pub use api::{router, serve, AppState, Clock};
pub use config::{ExerciseEntry, ServiceConfig};
pub use roster::{Principal, Role, Roster};
pub use store::{ExerciseStore, LogFilter};
