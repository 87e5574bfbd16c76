//! Risk-aware constrained contextual bandits.
//!
//! The crate is organized around five pieces:
//!
//! - [`nn`]: a minimal fully connected network substrate (forward, backprop, Adam),
//!   sized for small actor/critic topologies.
//! - [`distributional`]: quantile regression machinery (quantile loss, Huber loss,
//!   quantile Huber loss) shared by all distributional critics.
//! - [`agents`]: the risk-aware learner (actor + M+1 distributional quantile
//!   critics) and its three neural ablation baselines, with replay buffer and
//!   Ornstein-Uhlenbeck exploration noise.
//! - [`envs`]: three benchmark environments behind one interface — a synthetic
//!   quadratic environment, a polynomial environment of configurable
//!   dimensionality, and a simulated 5G transport-block offloading environment.
//! - [`harness`]: experiment orchestration (multi-seed runs, parameter sweeps,
//!   metrics, CSV/JSON/SVG artifacts).
//!
//! The `rancb` binary exposes `train`, `eval`, `sweep`, and `bench` subcommands
//! on top of the harness; see [`config`] for the JSON config schema.

pub mod agents;
pub mod config;
pub mod distributional;
pub mod envs;
pub mod harness;
pub mod nn;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix had the wrong dimensions for the operation.
    #[error("shape mismatch: expected {expected}, got {got} ({context})")]
    Shape {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    /// A configuration value is invalid (bad range, missing field, inconsistent set).
    #[error("config error: {0}")]
    Config(String),
    /// A numeric failure at runtime (non-finite loss or gradient).
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
