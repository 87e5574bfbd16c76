//! Synthetic quadratic environment: 3-dimensional uniform contexts, scalar
//! action, one reward and two constraint metrics with additive Gaussian noise.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ConstraintDef, Direction, Env, StepOutcome};
use crate::{Error, Result};

pub const SYNTHETIC_BOUND: f64 = 0.3;
pub const SYNTHETIC_ACTION_LO: f64 = -2.0;
pub const SYNTHETIC_ACTION_HI: f64 = 2.0;

/// Noiseless metric values for context `s` and scalar action `a`:
/// reward `s0*a^2 + s1*a`, constraints `s0*a^2 - s1*a` and the same pair
/// shifted by `s2`.
pub fn synthetic_metrics(s: &[f64], a: f64) -> (f64, f64, f64) {
    let r = s[0] * a * a + s[1] * a;
    let c1 = s[0] * a * a - s[1] * a;
    let d = a - s[2];
    let c2 = s[0] * d * d - s[1] * d;
    (r, c1, c2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticQuadraticEnv {
    sigma_env: f64,
    rng: ChaCha8Rng,
    context: Vec<f64>,
}

impl SyntheticQuadraticEnv {
    pub fn new(sigma_env: f64, seed: u64) -> Self {
        let mut env = SyntheticQuadraticEnv {
            sigma_env,
            rng: crate::harness::seeded_rng(seed, crate::harness::STREAM_ENV),
            context: vec![0.0; 3],
        };
        env.context = env.draw_context();
        env
    }

    pub fn sigma_env(&self) -> f64 {
        self.sigma_env
    }

    fn draw_context(&mut self) -> Vec<f64> {
        (0..3).map(|_| self.rng.gen_range(0.0..1.0)).collect()
    }
}

impl Env for SyntheticQuadraticEnv {
    fn context_dim(&self) -> usize {
        3
    }
    fn action_dim(&self) -> usize {
        1
    }
    fn action_box(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![SYNTHETIC_ACTION_LO], vec![SYNTHETIC_ACTION_HI])
    }
    fn constraints(&self) -> Vec<ConstraintDef> {
        vec![
            ConstraintDef { bound: SYNTHETIC_BOUND, direction: Direction::Upper },
            ConstraintDef { bound: SYNTHETIC_BOUND, direction: Direction::Upper },
        ]
    }
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.rng = crate::harness::seeded_rng(seed, crate::harness::STREAM_ENV);
        self.context = self.draw_context();
        self.context.clone()
    }
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if action.len() != 1 {
            return Err(Error::Shape { expected: 1, got: action.len(), context: "synthetic action" });
        }
        let (r, c1, c2) = synthetic_metrics(&self.context, action[0]);
        let (r, c1, c2) = if self.sigma_env > 0.0 {
            let noise = Normal::new(0.0, self.sigma_env).map_err(|e| Error::config(e.to_string()))?;
            (
                r + noise.sample(&mut self.rng),
                c1 + noise.sample(&mut self.rng),
                c2 + noise.sample(&mut self.rng),
            )
        } else {
            (r, c1, c2)
        };
        self.context = self.draw_context();
        Ok(StepOutcome {
            reward: r,
            constraints: vec![c1, c2],
            next_context: self.context.clone(),
            ran: None,
        })
    }
}
