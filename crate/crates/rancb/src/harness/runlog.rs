//! Per-run records, summaries, and the metrics computed from them.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::ConstraintDef;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    Infer,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Train => "train",
            Phase::Infer => "infer",
        })
    }
}

/// One environment interaction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub phase: Phase,
    pub reward: f64,
    pub constraints: Vec<f64>,
    /// Accumulated constraint violation up to and including this step.
    pub gamma: f64,
    pub action: Vec<f64>,
}

/// Summary statistics of one seed's run, all recomputable from the records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub train_steps: usize,
    pub infer_steps: usize,
    pub mean_train_reward: f64,
    pub mean_infer_reward: f64,
    /// Mean per-step constraint violation (summed over constraints) during
    /// inference.
    pub mean_infer_violation: f64,
    pub final_gamma: f64,
    /// RAN runs only: clamped inference unreliability `max(0, (1-eps) - mean
    /// reliability)` and its signed value.
    pub unreliability: Option<f64>,
    pub signed_unreliability: Option<f64>,
    /// RAN runs only: mean inference energy per period (J).
    pub mean_infer_energy: Option<f64>,
}

/// Everything logged for one (spec, seed) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunLog {
    pub seed: u64,
    pub records: Vec<StepRecord>,
    pub summary: Summary,
}

/// Accumulated violation `Gamma_t` after the last of `records`: the running
/// sum over steps and constraints of the positive constraint excess.
pub fn accumulated_violation(records: &[StepRecord], constraints: &[ConstraintDef]) -> Result<f64> {
    let mut total = 0.0;
    for rec in records {
        if rec.constraints.len() != constraints.len() {
            return Err(Error::Shape {
                expected: constraints.len(),
                got: rec.constraints.len(),
                context: "accumulated_violation record",
            });
        }
        for (value, def) in rec.constraints.iter().zip(constraints) {
            total += def.direction.violation(*value, def.bound);
        }
    }
    Ok(total)
}

/// Mean unreliability of a RAN run: `(1-eps) - mean reliability`, reported
/// clamped at zero plus its signed value. Reliability is the first constraint
/// column.
pub fn mean_unreliability(records: &[StepRecord], epsilon: f64) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(Error::config("mean_unreliability of an empty record set"));
    }
    let mean_rel = records.iter().map(|r| r.constraints[0]).sum::<f64>() / records.len() as f64;
    let signed = (1.0 - epsilon) - mean_rel;
    Ok((signed.max(0.0), signed))
}

/// Sample mean and normal-approximation 95% confidence half-width.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

/// Linear-interpolation percentile, `p` in `[0, 100]`.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = (p / 100.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

impl RunLog {
    /// Build the summary from raw records; used both when logging and when
    /// verifying that summaries are recomputable.
    pub fn summarize(
        seed: u64,
        records: Vec<StepRecord>,
        defs: &[ConstraintDef],
        epsilon: Option<f64>,
        energies: Option<Vec<f64>>,
    ) -> RunLog {
        let train: Vec<&StepRecord> = records.iter().filter(|r| r.phase == Phase::Train).collect();
        let infer: Vec<&StepRecord> = records.iter().filter(|r| r.phase == Phase::Infer).collect();
        let mean = |rs: &[&StepRecord], f: &dyn Fn(&StepRecord) -> f64| {
            if rs.is_empty() {
                0.0
            } else {
                rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64
            }
        };
        let infer_records: Vec<StepRecord> = infer.iter().map(|r| (*r).clone()).collect();
        let (unrel, signed) = match epsilon {
            Some(eps) if !infer_records.is_empty() => {
                let (u, s) = mean_unreliability(&infer_records, eps).unwrap();
                (Some(u), Some(s))
            }
            _ => (None, None),
        };
        let mean_infer_energy = energies.as_ref().and_then(|es| {
            let n = infer.len();
            if n == 0 || es.len() < n {
                None
            } else {
                Some(es[es.len() - n..].iter().sum::<f64>() / n as f64)
            }
        });
        let summary = Summary {
            seed,
            train_steps: train.len(),
            infer_steps: infer.len(),
            mean_train_reward: mean(&train, &|r| r.reward),
            mean_infer_reward: mean(&infer, &|r| r.reward),
            mean_infer_violation: mean(&infer, &|r| {
                r.constraints
                    .iter()
                    .zip(defs)
                    .map(|(v, def)| def.direction.violation(*v, def.bound))
                    .sum()
            }),
            final_gamma: records.last().map_or(0.0, |r| r.gamma),
            unreliability: unrel,
            signed_unreliability: signed,
            mean_infer_energy,
        };
        RunLog { seed, records, summary }
    }

    /// Persist records as CSV with header `t,phase,reward,c1,...,cM,gamma,a1,...,ad`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let m = self.records.first().map_or(0, |r| r.constraints.len());
        let d = self.records.first().map_or(0, |r| r.action.len());
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "t,phase,reward")?;
        for i in 1..=m {
            write!(out, ",c{i}")?;
        }
        write!(out, ",gamma")?;
        for i in 1..=d {
            write!(out, ",a{i}")?;
        }
        writeln!(out)?;
        for r in &self.records {
            write!(out, "{},{},{}", r.t, r.phase, r.reward)?;
            for c in &r.constraints {
                write!(out, ",{c}")?;
            }
            write!(out, ",{}", r.gamma)?;
            for a in &r.action {
                write!(out, ",{a}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}
