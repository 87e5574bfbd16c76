//! Wall-clock benchmark of deterministic single-action inference.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::agents::Agent;
use crate::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatencyStats {
    pub n_trials: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

/// Time `select_action(explore = false)` over `n_trials` after a short
/// warm-up. Single measurement (`n_trials = 1`) reports zero spread.
pub fn latency_bench(agent: &mut Agent, context: &[f64], n_trials: usize) -> Result<LatencyStats> {
    assert!(n_trials >= 1, "latency_bench needs at least one trial");
    for _ in 0..100.min(n_trials) {
        agent.select_action(context, false)?;
    }
    let mut samples = Vec::with_capacity(n_trials);
    for _ in 0..n_trials {
        let t0 = Instant::now();
        let action = agent.select_action(context, false)?;
        let dt = t0.elapsed().as_secs_f64() * 1e3;
        std::hint::black_box(action);
        samples.push(dt);
    }
    let mean = samples.iter().sum::<f64>() / n_trials as f64;
    let std = if n_trials > 1 {
        (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n_trials - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(LatencyStats {
        n_trials,
        mean_ms: mean,
        std_ms: std,
        min_ms: samples.iter().copied().fold(f64::INFINITY, f64::min),
        max_ms: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}
