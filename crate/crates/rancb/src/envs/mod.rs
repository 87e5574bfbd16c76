//! Benchmark environments behind one contextual-bandit interface.
//!
//! Each step the environment hands out an i.i.d. context, takes an action,
//! and returns the reward plus `M` constraint observations. Contexts are never
//! conditioned on past actions.

mod polynomial;
mod ran;
mod synthetic;

pub use polynomial::{polynomial_metrics, PolynomialDEnv};
pub use ran::{context_histogram, load_trace, RanConfig, RanOffloadingEnv, RanStepInfo, TraceTb, UnitParams};
pub use synthetic::{synthetic_metrics, SyntheticQuadraticEnv};

use serde::{Deserialize, Serialize};

use crate::Result;

/// Whether a constraint bounds its metric from above (`c < bound`) or from
/// below (`c > bound`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
}

impl Direction {
    /// Positive part of the constraint excess: how far `value` violates `bound`.
    pub fn violation(self, value: f64, bound: f64) -> f64 {
        match self {
            Direction::Upper => (value - bound).max(0.0),
            Direction::Lower => (bound - value).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDef {
    pub bound: f64,
    pub direction: Direction,
}

/// One interaction result.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub reward: f64,
    pub constraints: Vec<f64>,
    pub next_context: Vec<f64>,
    /// Extra bookkeeping emitted by the RAN simulator only.
    pub ran: Option<RanStepInfo>,
}

pub trait Env {
    fn context_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Per-dimension action box `(lo, hi)`.
    fn action_box(&self) -> (Vec<f64>, Vec<f64>);
    fn constraints(&self) -> Vec<ConstraintDef>;
    /// Reseed and return the first context.
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome>;
}

/// Concrete environment dispatch; serializable so checkpoints can freeze the
/// full simulator state. Externally tagged on purpose: internal tagging would
/// buffer the embedded RNG state through a representation that cannot carry
/// its 128-bit stream position.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvBox {
    Synthetic(SyntheticQuadraticEnv),
    Polynomial(PolynomialDEnv),
    Ran(Box<RanOffloadingEnv>),
}

impl Env for EnvBox {
    fn context_dim(&self) -> usize {
        match self {
            EnvBox::Synthetic(e) => e.context_dim(),
            EnvBox::Polynomial(e) => e.context_dim(),
            EnvBox::Ran(e) => e.context_dim(),
        }
    }
    fn action_dim(&self) -> usize {
        match self {
            EnvBox::Synthetic(e) => e.action_dim(),
            EnvBox::Polynomial(e) => e.action_dim(),
            EnvBox::Ran(e) => e.action_dim(),
        }
    }
    fn action_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            EnvBox::Synthetic(e) => e.action_box(),
            EnvBox::Polynomial(e) => e.action_box(),
            EnvBox::Ran(e) => e.action_box(),
        }
    }
    fn constraints(&self) -> Vec<ConstraintDef> {
        match self {
            EnvBox::Synthetic(e) => e.constraints(),
            EnvBox::Polynomial(e) => e.constraints(),
            EnvBox::Ran(e) => e.constraints(),
        }
    }
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        match self {
            EnvBox::Synthetic(e) => e.reset(seed),
            EnvBox::Polynomial(e) => e.reset(seed),
            EnvBox::Ran(e) => e.reset(seed),
        }
    }
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        match self {
            EnvBox::Synthetic(e) => e.step(action),
            EnvBox::Polynomial(e) => e.step(action),
            EnvBox::Ran(e) => e.step(action),
        }
    }
}
