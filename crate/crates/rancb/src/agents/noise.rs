//! Ornstein-Uhlenbeck exploration noise (dt = 1, zero mean).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuNoise {
    state: Vec<f64>,
    theta: f64,
    sigma: f64,
}

impl OuNoise {
    pub fn new(dim: usize, theta: f64, sigma: f64) -> Self {
        OuNoise {
            state: vec![0.0; dim],
            theta,
            sigma,
        }
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// `x <- x + theta * (0 - x) + sigma * xi`, `xi ~ N(0, I)`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        for x in &mut self.state {
            let xi: f64 = StandardNormal.sample(rng);
            *x += self.theta * (0.0 - *x) + self.sigma * xi;
        }
        self.state.clone()
    }
}
