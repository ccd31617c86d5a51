//! Simulation and optimization of knowledge-dynamics models.
//!
//! The library models a learner whose knowledge grows in proportion to the
//! gap between the teacher's requirement level and what the learner already
//! knows, and decays by forgetting. Three model families are provided:
//!
//! - a one-component model with a motivation cutoff (learning shuts off when
//!   the requirement runs too far ahead),
//! - a two-component model with independently taught and forgotten knowledge
//!   categories,
//! - a two-component model where weak knowledge consolidates into strong
//!   knowledge during lessons.
//!
//! On top of the models sit lesson schedules and requirement policies
//! ([`policies`]), a fixed-step simulation engine with effort accounting
//! ([`engine`]), a constrained random-search optimizer over lesson plans
//! ([`optimizer`]), and five ready-to-run demonstration scenarios
//! ([`scenarios`]). The `learnsim` binary exposes all of it behind a
//! config-driven CLI.

pub mod cli;
pub mod config;
pub mod engine;
pub mod models;
pub mod optimizer;
pub mod plot;
pub mod policies;
pub mod scenarios;

pub use engine::{simulate, SimConfig, Trajectory};
pub use models::{Model, OneCompParams, TwoCompT1Params, TwoCompT2Params};
pub use optimizer::{evaluate, hill_climb, OptimizationProblem};
pub use policies::{LessonSchedule, RequirementPolicy};
