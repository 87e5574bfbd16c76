//! Versioned JSON checkpoints freezing the full agent + environment state, so
//! a resumed run reproduces the original continuation bit-for-bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::Agent;
use crate::envs::EnvBox;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "rancb-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub magic: String,
    pub version: u32,
    pub seed: u64,
    /// Environment steps taken before this checkpoint was written.
    pub step: usize,
    pub context: Vec<f64>,
    pub agent: Agent,
    pub env: EnvBox,
}

impl Checkpoint {
    pub fn new(seed: u64, step: usize, context: Vec<f64>, agent: Agent, env: EnvBox) -> Self {
        Checkpoint {
            magic: CHECKPOINT_MAGIC.to_string(),
            version: CHECKPOINT_VERSION,
            seed,
            step,
            context,
            agent,
            env,
        }
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    // string-based serde: the reader-based JSON deserializer cannot handle the
    // 128-bit RNG word position embedded in the agent state
    std::fs::write(path, serde_json::to_string(ckpt)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&text)?;
    if ckpt.magic != CHECKPOINT_MAGIC {
        return Err(Error::numeric(format!(
            "checkpoint integrity failure: bad magic {:?}",
            ckpt.magic
        )));
    }
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::numeric(format!(
            "unsupported checkpoint version {} (expected {})",
            ckpt.version, CHECKPOINT_VERSION
        )));
    }
    Ok(ckpt)
}
