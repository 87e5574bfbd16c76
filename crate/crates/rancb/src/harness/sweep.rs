//! Parameter sweeps: the cross product of axis values and seeds, aggregated
//! into per-value means with 95% confidence half-widths.
//!
//! The `alpha` axis is special: risk level is an *input* of the risk-aware
//! policy, so each seed trains once and is then re-evaluated per alpha without
//! retraining. Every other axis changes the problem and retrains per value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{run_inference, run_seed, ExperimentSpec, SeedRun};
use super::runlog::{mean_ci, RunLog};
use crate::agents::AgentKind;
use crate::envs::{Env, EnvBox, PolynomialDEnv, RanOffloadingEnv, SyntheticQuadraticEnv};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SigmaEnv,
    Alpha,
    Lambda,
    Epsilon,
    Dim,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigma_env" => Ok(SweepAxis::SigmaEnv),
            "alpha" => Ok(SweepAxis::Alpha),
            "lambda" => Ok(SweepAxis::Lambda),
            "epsilon" => Ok(SweepAxis::Epsilon),
            "dim" => Ok(SweepAxis::Dim),
            other => Err(Error::config(format!(
                "unknown sweep axis {other:?} (expected sigma_env | alpha | lambda | epsilon | dim)"
            ))),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::SigmaEnv => "sigma_env",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Lambda => "lambda",
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Dim => "dim",
        })
    }
}

/// Mean and 95% confidence half-width of one summary metric over seeds.
pub type MetricCi = (f64, f64);

/// Aggregation of one sweep value over all its seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub value: f64,
    pub n_seeds: usize,
    pub mean_infer_reward: MetricCi,
    pub mean_train_reward: MetricCi,
    pub mean_infer_violation: MetricCi,
    pub final_gamma: MetricCi,
    pub unreliability: Option<MetricCi>,
    pub mean_infer_energy: Option<MetricCi>,
    /// Per-seed failures as error strings; the sweep continues past them.
    pub failures: Vec<String>,
    /// Raw per-seed logs for curve/band plotting.
    #[serde(skip)]
    pub logs: Vec<RunLog>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub cells: Vec<CellResult>,
}

impl CellResult {
    fn aggregate(value: f64, logs: Vec<RunLog>, failures: Vec<String>) -> CellResult {
        let pick = |f: &dyn Fn(&RunLog) -> Option<f64>| -> Vec<f64> {
            logs.iter().filter_map(|l| f(l)).collect()
        };
        let infer_reward = pick(&|l| Some(l.summary.mean_infer_reward));
        let train_reward = pick(&|l| Some(l.summary.mean_train_reward));
        let violation = pick(&|l| Some(l.summary.mean_infer_violation));
        let gamma = pick(&|l| Some(l.summary.final_gamma));
        let unrel = pick(&|l| l.summary.unreliability);
        let energy = pick(&|l| l.summary.mean_infer_energy);
        CellResult {
            value,
            n_seeds: logs.len(),
            mean_infer_reward: mean_ci(&infer_reward),
            mean_train_reward: mean_ci(&train_reward),
            mean_infer_violation: mean_ci(&violation),
            final_gamma: mean_ci(&gamma),
            unreliability: if unrel.len() == logs.len() && !unrel.is_empty() {
                Some(mean_ci(&unrel))
            } else {
                None
            },
            mean_infer_energy: if energy.len() == logs.len() && !energy.is_empty() {
                Some(mean_ci(&energy))
            } else {
                None
            },
            failures,
            logs,
        }
    }
}

/// Validate every axis value against the spec before any run starts.
pub fn validate_axis(spec: &ExperimentSpec, axis: SweepAxis, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    match axis {
        SweepAxis::Alpha => {
            for v in values {
                spec.agent.constraint_quantiles.index_of(*v)?;
            }
        }
        SweepAxis::SigmaEnv => {
            if matches!(spec.env, EnvBox::Ran(_)) {
                return Err(Error::config("sigma_env sweep needs the synthetic or polynomial environment"));
            }
            if values.iter().any(|v| *v < 0.0) {
                return Err(Error::config("sigma_env must be >= 0"));
            }
        }
        SweepAxis::Lambda => {
            if values.iter().any(|v| *v <= 0.0) {
                return Err(Error::config("lambda must be > 0"));
            }
        }
        SweepAxis::Epsilon => {
            if !matches!(spec.env, EnvBox::Ran(_)) {
                return Err(Error::config("epsilon sweep needs the RAN environment"));
            }
            if values.iter().any(|v| !(0.0..1.0).contains(v)) {
                return Err(Error::config("epsilon must lie in [0, 1)"));
            }
        }
        SweepAxis::Dim => {
            if !matches!(spec.env, EnvBox::Polynomial(_)) {
                return Err(Error::config("dim sweep needs the polynomial environment"));
            }
            if values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
                return Err(Error::config("dim values must be positive integers"));
            }
        }
    }
    Ok(())
}

/// Derive the spec for one non-alpha sweep value.
fn spec_for_value(spec: &ExperimentSpec, axis: SweepAxis, value: f64) -> Result<ExperimentSpec> {
    let mut out = spec.clone();
    match axis {
        SweepAxis::Lambda => out.agent.lambda = value,
        SweepAxis::SigmaEnv => {
            out.env = match &spec.env {
                EnvBox::Synthetic(_) => EnvBox::Synthetic(SyntheticQuadraticEnv::new(value, 0)),
                EnvBox::Polynomial(e) => {
                    EnvBox::Polynomial(PolynomialDEnv::new(e.dim(), value, 0)?)
                }
                EnvBox::Ran(_) => unreachable!("validated"),
            };
        }
        SweepAxis::Epsilon => {
            let EnvBox::Ran(e) = &spec.env else { unreachable!("validated") };
            let mut config = e.config().clone();
            config.epsilon = value;
            out.env = EnvBox::Ran(Box::new(RanOffloadingEnv::new(config, 0)?));
            // the reliability bound follows epsilon
            let defs = out.env.constraints();
            for (risk, def) in out.agent.risk.constraints.iter_mut().zip(&defs) {
                risk.bound = def.bound;
                risk.direction = def.direction;
            }
        }
        SweepAxis::Dim => {
            let EnvBox::Polynomial(e) = &spec.env else { unreachable!("validated") };
            out.env = EnvBox::Polynomial(PolynomialDEnv::new(value as usize, e.sigma_env(), 0)?);
        }
        SweepAxis::Alpha => unreachable!("alpha handled separately"),
    }
    Ok(out)
}

/// Run the full sweep. Failed (value, seed) cells are recorded and skipped.
pub fn sweep(spec: &ExperimentSpec, axis: SweepAxis, values: &[f64]) -> Result<SweepTable> {
    spec.validate()?;
    validate_axis(spec, axis, values)?;
    if axis == SweepAxis::Alpha && spec.kind == AgentKind::Rancb {
        return sweep_alpha(spec, values);
    }
    if axis == SweepAxis::Alpha {
        // baselines have no risk input; alpha only shifts which quantile the
        // profile nominally enforces, so retrain per value for uniformity
        let cells: Vec<CellResult> = values
            .iter()
            .map(|&v| {
                let mut s = spec.clone();
                s.agent.risk = s.agent.risk.with_alpha(v);
                run_cell(&s, v)
            })
            .collect();
        return Ok(SweepTable { axis, cells });
    }
    let cells: Vec<CellResult> = values
        .iter()
        .map(|&v| match spec_for_value(spec, axis, v) {
            Ok(s) => run_cell(&s, v),
            Err(e) => CellResult::aggregate(v, Vec::new(), vec![e.to_string()]),
        })
        .collect();
    Ok(SweepTable { axis, cells })
}

fn run_cell(spec: &ExperimentSpec, value: f64) -> CellResult {
    let results: Vec<(u64, Result<SeedRun>)> = spec
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_seed(spec, seed)))
        .collect();
    let mut logs = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(run) => logs.push(run.log),
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    CellResult::aggregate(value, logs, failures)
}

/// Alpha sweep for the risk-aware agent: train once per seed against the full
/// training alpha set, then evaluate each alpha on the trained policy.
fn sweep_alpha(spec: &ExperimentSpec, values: &[f64]) -> Result<SweepTable> {
    let mut train_spec = spec.clone();
    train_spec.t_infer = 0;
    let trained: Vec<(u64, Result<SeedRun>)> = train_spec
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_seed(&train_spec, seed)))
        .collect();

    let defs = spec.env.constraints();
    let epsilon = match &spec.env {
        EnvBox::Ran(r) => Some(r.config().epsilon),
        _ => None,
    };
    let mut cells = Vec::with_capacity(values.len());
    for &alpha in values {
        let per_seed: Vec<Result<RunLog>> = trained
            .par_iter()
            .map(|(seed, tr)| -> Result<RunLog> {
                let tr = tr.as_ref().map_err(|e| Error::config(e.to_string()))?;
                let mut agent = tr.agent.clone();
                let mut env = tr.env.clone();
                let mut context = tr.context.clone();
                agent.set_risk_alpha(alpha)?;
                let mut records = Vec::new();
                let mut energies = Vec::new();
                let mut gamma = 0.0;
                let mut t = 0;
                run_inference(
                    &mut agent, &mut env, &mut context, spec.t_infer, &mut records,
                    &mut energies, &mut gamma, &mut t,
                )?;
                Ok(RunLog::summarize(*seed, records, &defs, epsilon, Some(energies)))
            })
            .collect();
        let mut logs = Vec::new();
        let mut failures = Vec::new();
        for (i, r) in per_seed.into_iter().enumerate() {
            match r {
                Ok(log) => logs.push(log),
                Err(e) => failures.push(format!("seed {}: {e}", spec.seeds[i])),
            }
        }
        cells.push(CellResult::aggregate(alpha, logs, failures));
    }
    Ok(SweepTable { axis: SweepAxis::Alpha, cells })
}

impl SweepTable {
    /// Serialize as CSV: one row per value, metric mean/ci pairs as columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "value,n_seeds,infer_reward_mean,infer_reward_ci,train_reward_mean,train_reward_ci,\
             infer_violation_mean,infer_violation_ci,final_gamma_mean,final_gamma_ci,\
             unreliability_mean,unreliability_ci,energy_mean,energy_ci,failures\n",
        );
        for c in &self.cells {
            let opt = |m: Option<MetricCi>, i: usize| m.map_or(String::new(), |v| {
                if i == 0 { v.0.to_string() } else { v.1.to_string() }
            });
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                c.value,
                c.n_seeds,
                c.mean_infer_reward.0,
                c.mean_infer_reward.1,
                c.mean_train_reward.0,
                c.mean_train_reward.1,
                c.mean_infer_violation.0,
                c.mean_infer_violation.1,
                c.final_gamma.0,
                c.final_gamma.1,
                opt(c.unreliability, 0),
                opt(c.unreliability, 1),
                opt(c.mean_infer_energy, 0),
                opt(c.mean_infer_energy, 1),
                c.failures.len(),
            ));
        }
        out
    }
}
