//! Agent-based infection simulator for a synthetic ward, producing
//! learner-facing datasets in which a chosen causal structure (mediator,
//! confounder or collider) can be discovered.

pub mod analysis;
pub mod audit;
pub mod calendar;
pub mod config;
pub mod dataset;
pub mod engine;
pub mod epidemic;
pub mod error;
pub mod mobility;
pub mod pipeline;
pub mod place;
pub mod rng;
pub mod scenario;
pub mod story;
pub mod verify;
pub mod world;

pub use error::{Error, Result};
