//! Experiment orchestration: seeded runs, sweeps, metrics, artifacts.
//!
//! ## RNG splitting
//!
//! One global seed drives every random component through independent ChaCha
//! streams: the seed selects the key, and each component draws from its own
//! stream number. Components therefore never share randomness, and adding
//! draws to one never perturbs another.

mod bench;
mod chart;
mod checkpoint;
mod run;
mod runlog;
mod sweep;

pub use bench::{latency_bench, LatencyStats};
pub use chart::{bar_chart_svg, line_chart_svg, BarGroup, Series};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use run::{
    run, run_inference, run_seed, ExperimentSpec, SeedRun, DEFAULT_T_INFER, DEFAULT_T_TRAIN_RAN,
    DEFAULT_T_TRAIN_SYNTH,
};
pub use runlog::{
    accumulated_violation, mean_ci, mean_unreliability, percentile, Phase, RunLog, StepRecord,
    Summary,
};
pub use sweep::{sweep, validate_axis, CellResult, SweepAxis, SweepTable};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream number for environment randomness (contexts, metric noise, traffic).
pub const STREAM_ENV: u64 = 1;
/// Stream number for agent randomness (init, exploration, replay sampling).
pub const STREAM_AGENT: u64 = 2;

/// The declared seed-splitting rule: `seed` keys the generator, `stream`
/// selects an independent ChaCha stream.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
