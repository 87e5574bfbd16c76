//! Polynomial environment of configurable dimensionality `D`: contexts and
//! actions are both `D`-dimensional, the reward is `sum_i s_i * a_i^i` for
//! `i = 1..=D`, and the single constraint flips the sign of every other term.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ConstraintDef, Direction, Env, StepOutcome};
use crate::{Error, Result};

pub const POLYNOMIAL_BOUND: f64 = 0.3;

/// Noiseless reward and constraint. Term `i` (1-based) is `s[i-1] * a[i-1]^i`,
/// with alternating signs `(-1)^i` on the constraint.
pub fn polynomial_metrics(s: &[f64], a: &[f64]) -> (f64, f64) {
    let mut r = 0.0;
    let mut c = 0.0;
    for i in 1..=s.len() {
        let term = s[i - 1] * a[i - 1].powi(i as i32);
        r += term;
        c += if i % 2 == 0 { term } else { -term };
    }
    (r, c)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialDEnv {
    dim: usize,
    sigma_env: f64,
    rng: ChaCha8Rng,
    context: Vec<f64>,
}

impl PolynomialDEnv {
    pub fn new(dim: usize, sigma_env: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("polynomial env dimension must be >= 1"));
        }
        let mut env = PolynomialDEnv {
            dim,
            sigma_env,
            rng: crate::harness::seeded_rng(seed, crate::harness::STREAM_ENV),
            context: vec![0.0; dim],
        };
        env.context = env.draw_context();
        Ok(env)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma_env(&self) -> f64 {
        self.sigma_env
    }

    fn draw_context(&mut self) -> Vec<f64> {
        (0..self.dim).map(|_| self.rng.gen_range(0.0..1.0)).collect()
    }
}

impl Env for PolynomialDEnv {
    fn context_dim(&self) -> usize {
        self.dim
    }
    fn action_dim(&self) -> usize {
        self.dim
    }
    fn action_box(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-1.0; self.dim], vec![1.0; self.dim])
    }
    fn constraints(&self) -> Vec<ConstraintDef> {
        vec![ConstraintDef { bound: POLYNOMIAL_BOUND, direction: Direction::Upper }]
    }
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.rng = crate::harness::seeded_rng(seed, crate::harness::STREAM_ENV);
        self.context = self.draw_context();
        self.context.clone()
    }
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if action.len() != self.dim {
            return Err(Error::Shape { expected: self.dim, got: action.len(), context: "polynomial action" });
        }
        let (mut r, mut c) = polynomial_metrics(&self.context, action);
        if self.sigma_env > 0.0 {
            let noise = Normal::new(0.0, self.sigma_env).map_err(|e| Error::config(e.to_string()))?;
            r += noise.sample(&mut self.rng);
            c += noise.sample(&mut self.rng);
        }
        self.context = self.draw_context();
        Ok(StepOutcome {
            reward: r,
            constraints: vec![c],
            next_context: self.context.clone(),
            ran: None,
        })
    }
}
