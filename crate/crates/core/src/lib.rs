//! Value learning in tabular Markov environments.
//!
//! - [`env`]: layered single-agent loops and random two-agent environments.
//! - [`agent`]: Q-tables, ε-greedy SARSA and the fostered-value update.
//! - [`empathy`]: reconstructing a hidden agent's values from visit frequencies.
//! - [`mdl`]: description-length comparison of one- and two-agent hypotheses.
//! - [`experiments`]: replicated runs of all three studies.
//! - [`config`], [`output`] and [`runner`]: the CLI's configuration, artifacts
//!   and command dispatch.

pub mod agent;
pub mod config;
pub mod empathy;
pub mod env;
pub mod error;
pub mod experiments;
pub mod mdl;
pub mod output;
pub mod runner;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
