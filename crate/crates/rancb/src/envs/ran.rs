//! Simulated 5G transport-block offloading environment.
//!
//! Every decision period covers 100 TTIs of 1 ms. Per TTI, each emulated user
//! may generate a transport block (TB) characterized by signal quality, MCS
//! index, and size in bits. The action is a normalized bit threshold in
//! `[0, 1]`: a TB whose size exceeds `threshold * max_bits` is routed to the
//! hardware accelerator (HA), otherwise to the CPU. Each unit drains a FIFO
//! queue; a TB whose total sojourn would exceed the deadline `P_max` is
//! discarded — if it was already being processed, its energy is still charged.
//!
//! The agent-facing reward is the negated, rescaled period energy; the single
//! constraint is the period reliability (fraction of TBs decoded in time) in
//! lower-bound form against `1 - epsilon`.
//!
//! The service-time and energy models are simulator calibrations: HA service is
//! much faster than CPU but draws more power, and both carry a constant idle
//! draw. All parameters are configurable; a trace file can replace the TB
//! generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ConstraintDef, Direction, Env, StepOutcome};
use crate::{Error, Result};

/// Service-time and energy model of one processing unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitParams {
    /// Fixed per-TB service latency (ms).
    pub base_ms: f64,
    /// Additional service latency per bit (ms/bit).
    pub per_bit_ms: f64,
    /// Log-normal multiplicative jitter sigma on the service time (0 = deterministic).
    pub jitter_sd: f64,
    /// Active power draw while serving (W).
    pub draw_w: f64,
    /// Idle power draw (W), charged over the whole period.
    pub idle_w: f64,
    /// Fixed per-TB energy overhead (J).
    pub per_tb_j: f64,
}

impl Default for UnitParams {
    fn default() -> Self {
        // CPU defaults; see `RanConfig::default` for the HA variant. The two
        // units share one jitter draw per TB, and the CPU active energy
        // (draw_w * service) stays below the HA's for every size up to
        // max_bits, so routing more traffic to the CPU never costs energy.
        UnitParams {
            base_ms: 0.08,
            per_bit_ms: 2.0e-5,
            jitter_sd: 0.12,
            draw_w: 15.0,
            idle_w: 3.0,
            per_tb_j: 0.0005,
        }
    }
}

impl UnitParams {
    pub fn ha_default() -> Self {
        UnitParams {
            base_ms: 0.02,
            per_bit_ms: 1.0e-6,
            jitter_sd: 0.12,
            draw_w: 300.0,
            idle_w: 8.0,
            per_tb_j: 0.004,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RanConfig {
    pub users: usize,
    pub ttis_per_period: usize,
    pub tti_ms: f64,
    /// Hard deadline on total TB sojourn (ms).
    pub p_max_ms: f64,
    /// Reliability target: the constraint is `reliability >= 1 - epsilon`.
    pub epsilon: f64,
    /// Per-user per-TTI TB generation probability.
    pub tb_prob: f64,
    /// Log-space mean of the truncated log-normal TB size (bits).
    pub size_log_mean: f64,
    pub size_log_sd: f64,
    pub min_bits: f64,
    pub max_bits: f64,
    /// SNR distribution (dB), clipped to `[snr_min, snr_max]`.
    pub snr_mean: f64,
    pub snr_sd: f64,
    pub snr_min: f64,
    pub snr_max: f64,
    /// MCS indices are uniform over `0..=mcs_max`.
    pub mcs_max: u32,
    /// Service-time multiplier per dB of SNR below `snr_penalty_knee`.
    pub snr_penalty: f64,
    pub snr_penalty_knee: f64,
    pub cpu: UnitParams,
    pub ha: UnitParams,
    /// Histogram bins per feature dimension for the context.
    pub hist_bins: usize,
    /// Reward is `-energy / energy_scale`.
    pub energy_scale: f64,
}

impl Default for RanConfig {
    fn default() -> Self {
        RanConfig {
            users: 6,
            ttis_per_period: 100,
            tti_ms: 1.0,
            p_max_ms: 2.0,
            epsilon: 0.05,
            tb_prob: 0.25,
            size_log_mean: (15_000.0f64).ln(),
            size_log_sd: 0.8,
            min_bits: 1_000.0,
            max_bits: 100_000.0,
            snr_mean: 15.0,
            snr_sd: 5.0,
            snr_min: 0.0,
            snr_max: 30.0,
            mcs_max: 27,
            snr_penalty: 0.02,
            snr_penalty_knee: 10.0,
            cpu: UnitParams::default(),
            ha: UnitParams::ha_default(),
            hist_bins: 5,
            energy_scale: 3.0,
        }
    }
}

impl RanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ttis_per_period == 0 || self.tti_ms <= 0.0 || self.p_max_ms <= 0.0 {
            return Err(Error::config("RAN timing parameters must be positive"));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::config("RAN epsilon must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.tb_prob) {
            return Err(Error::config("RAN tb_prob must lie in [0, 1]"));
        }
        if self.min_bits <= 0.0 || self.max_bits <= self.min_bits {
            return Err(Error::config("RAN size bounds must satisfy 0 < min_bits < max_bits"));
        }
        if self.hist_bins == 0 {
            return Err(Error::config("RAN hist_bins must be >= 1"));
        }
        if self.energy_scale <= 0.0 {
            return Err(Error::config("RAN energy_scale must be positive"));
        }
        Ok(())
    }
}

/// One transport block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceTb {
    /// Absolute TTI index since the start of the run.
    pub tti_index: u64,
    pub size_bits: f64,
    pub snr_db: f64,
    pub mcs_index: u32,
}

/// Load a trace-replay file: one TB per line,
/// `tti_index, size_bits, snr_db, mcs_index`, comma-separated.
/// Blank lines and `#` comments are skipped.
pub fn load_trace(path: &std::path::Path) -> Result<Vec<TraceTb>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::config(format!(
                "trace line {}: expected 4 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse_err = |f: &str| Error::config(format!("trace line {}: bad field {f:?}", lineno + 1));
        out.push(TraceTb {
            tti_index: fields[0].parse().map_err(|_| parse_err(fields[0]))?,
            size_bits: fields[1].parse().map_err(|_| parse_err(fields[1]))?,
            snr_db: fields[2].parse().map_err(|_| parse_err(fields[2]))?,
            mcs_index: fields[3].parse().map_err(|_| parse_err(fields[3]))?,
        });
    }
    out.sort_by_key(|tb| tb.tti_index);
    Ok(out)
}

/// Per-step bookkeeping emitted alongside the reward/constraint view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RanStepInfo {
    pub energy_j: f64,
    pub reliability: f64,
    pub generated: u64,
    pub decoded_in_time: u64,
    /// Started within deadline but finished late; energy was still charged.
    pub decoded_late: u64,
    /// Discarded while still waiting in the FIFO queue.
    pub discarded_in_queue: u64,
}

/// Normalized 3-dimensional count histogram over (snr, mcs, size), flattened to
/// `bins^3` entries. All-zero when the period carried no TBs.
pub fn context_histogram(tbs: &[TraceTb], cfg: &RanConfig) -> Vec<f64> {
    let b = cfg.hist_bins;
    let mut hist = vec![0.0; b * b * b];
    if tbs.is_empty() {
        return hist;
    }
    let bin = |v: f64, lo: f64, hi: f64| -> usize {
        let frac = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        ((frac * b as f64) as usize).min(b - 1)
    };
    for tb in tbs {
        let i = bin(tb.snr_db, cfg.snr_min, cfg.snr_max);
        let j = bin(tb.mcs_index as f64, 0.0, cfg.mcs_max as f64 + 1.0);
        let k = bin(tb.size_bits, cfg.min_bits, cfg.max_bits);
        hist[(i * b + j) * b + k] += 1.0;
    }
    let total = tbs.len() as f64;
    for v in &mut hist {
        *v /= total;
    }
    hist
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RanOffloadingEnv {
    config: RanConfig,
    /// Traffic generation stream. Service jitter is keyed per TB instead so
    /// that the generated workload is identical across thresholds.
    rng: ChaCha8Rng,
    seed: u64,
    /// Absolute TTI index of the next period's first TTI.
    tti_cursor: u64,
    /// Absolute time (ms) each unit becomes free: [CPU, HA].
    busy_until: [f64; 2],
    context: Vec<f64>,
    /// Replaces the stochastic generator when present.
    trace: Option<Vec<TraceTb>>,
    trace_pos: usize,
}

impl RanOffloadingEnv {
    pub fn new(config: RanConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let dim = config.hist_bins.pow(3);
        Ok(RanOffloadingEnv {
            config,
            rng: crate::harness::seeded_rng(seed, crate::harness::STREAM_ENV),
            seed,
            tti_cursor: 0,
            busy_until: [0.0, 0.0],
            context: vec![0.0; dim],
            trace: None,
            trace_pos: 0,
        })
    }

    pub fn with_trace(config: RanConfig, trace: Vec<TraceTb>, seed: u64) -> Result<Self> {
        let mut env = Self::new(config, seed)?;
        env.trace = Some(trace);
        Ok(env)
    }

    pub fn config(&self) -> &RanConfig {
        &self.config
    }

    fn generate_period_tbs(&mut self) -> Vec<TraceTb> {
        let first = self.tti_cursor;
        let last = first + self.config.ttis_per_period as u64;
        if let Some(trace) = &self.trace {
            let mut out = Vec::new();
            while self.trace_pos < trace.len() && trace[self.trace_pos].tti_index < last {
                if trace[self.trace_pos].tti_index >= first {
                    out.push(trace[self.trace_pos]);
                }
                self.trace_pos += 1;
            }
            return out;
        }
        let cfg = &self.config;
        let size_dist = Normal::new(cfg.size_log_mean, cfg.size_log_sd).unwrap();
        let snr_dist = Normal::new(cfg.snr_mean, cfg.snr_sd).unwrap();
        let mut out = Vec::new();
        for k in first..last {
            for _ in 0..cfg.users {
                if self.rng.gen::<f64>() < cfg.tb_prob {
                    let size = size_dist.sample(&mut self.rng).exp().clamp(cfg.min_bits, cfg.max_bits);
                    let snr = snr_dist.sample(&mut self.rng).clamp(cfg.snr_min, cfg.snr_max);
                    let mcs = self.rng.gen_range(0..=cfg.mcs_max);
                    out.push(TraceTb { tti_index: k, size_bits: size, snr_db: snr, mcs_index: mcs });
                }
            }
        }
        out
    }

    /// Service time for TB number `seq` of the current period on `unit`.
    ///
    /// The jitter draw is keyed by (run seed, TTI, sequence number), not by the
    /// routing decision, so the same TB sees the same standard-normal draw on
    /// either unit.
    fn service_time_ms(&self, tb: &TraceTb, seq: usize, unit: usize) -> f64 {
        let p = if unit == 0 { &self.config.cpu } else { &self.config.ha };
        let mut t = p.base_ms + p.per_bit_ms * tb.size_bits;
        let below = (self.config.snr_penalty_knee - tb.snr_db).max(0.0);
        t *= 1.0 + self.config.snr_penalty * below;
        if p.jitter_sd > 0.0 {
            let key = splitmix(splitmix(self.seed ^ 0x5261_6e53_6572_7669) ^ tb.tti_index)
                ^ splitmix(seq as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            let z: f64 = Normal::new(0.0, 1.0).unwrap().sample(&mut rng);
            t *= (p.jitter_sd * z).exp();
        }
        t
    }

    /// Simulate one decision period for threshold `a`, returning the
    /// bookkeeping and the next context.
    fn simulate_period(&mut self, a: f64) -> (RanStepInfo, Vec<f64>) {
        let cfg = self.config.clone();
        let tbs = self.generate_period_tbs();
        let period_ms = cfg.ttis_per_period as f64 * cfg.tti_ms;
        let threshold_bits = a * cfg.max_bits;

        let mut energy = (cfg.cpu.idle_w + cfg.ha.idle_w) * period_ms / 1000.0;
        let mut in_time = 0u64;
        let mut late = 0u64;
        let mut dropped_queued = 0u64;

        // TBs are already in arrival order (TTI, then generation order).
        for (seq, tb) in tbs.iter().enumerate() {
            let unit = if tb.size_bits > threshold_bits { 1 } else { 0 };
            let params = if unit == 0 { &cfg.cpu } else { &cfg.ha };
            let arrival = tb.tti_index as f64 * cfg.tti_ms;
            let deadline = arrival + cfg.p_max_ms;
            let start = self.busy_until[unit].max(arrival);
            if start >= deadline {
                // expired while queued: never serviced, no energy charged
                dropped_queued += 1;
                continue;
            }
            let service = self.service_time_ms(tb, seq, unit);
            let finish = start + service;
            self.busy_until[unit] = finish;
            energy += params.per_tb_j + params.draw_w * service / 1000.0;
            if finish <= deadline {
                in_time += 1;
            } else {
                late += 1;
            }
        }

        self.tti_cursor += cfg.ttis_per_period as u64;
        let generated = tbs.len() as u64;
        let reliability = if generated == 0 {
            1.0
        } else {
            in_time as f64 / generated as f64
        };
        let info = RanStepInfo {
            energy_j: energy,
            reliability,
            generated,
            decoded_in_time: in_time,
            decoded_late: late,
            discarded_in_queue: dropped_queued,
        };
        (info, context_histogram(&tbs, &cfg))
    }
}

impl Env for RanOffloadingEnv {
    fn context_dim(&self) -> usize {
        self.config.hist_bins.pow(3)
    }
    fn action_dim(&self) -> usize {
        1
    }
    fn action_box(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0], vec![1.0])
    }
    fn constraints(&self) -> Vec<ConstraintDef> {
        vec![ConstraintDef {
            bound: 1.0 - self.config.epsilon,
            direction: Direction::Lower,
        }]
    }
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.rng = crate::harness::seeded_rng(seed, crate::harness::STREAM_ENV);
        self.seed = seed;
        self.tti_cursor = 0;
        self.busy_until = [0.0, 0.0];
        self.trace_pos = 0;
        // warm-up period under a neutral threshold to obtain the first context
        let (_, ctx) = self.simulate_period(0.5);
        self.context = ctx;
        self.context.clone()
    }
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if action.len() != 1 {
            return Err(Error::Shape { expected: 1, got: action.len(), context: "ran action" });
        }
        let a = action[0].clamp(0.0, 1.0);
        let (info, next_ctx) = self.simulate_period(a);
        self.context = next_ctx;
        Ok(StepOutcome {
            reward: -info.energy_j / self.config.energy_scale,
            constraints: vec![info.reliability],
            next_context: self.context.clone(),
            ran: Some(info),
        })
    }
}
