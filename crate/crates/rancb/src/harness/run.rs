//! Training/inference runs: Alg.-style loop with exploration and one train
//! update per environment step, followed by a pure inference phase.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::runlog::{Phase, RunLog, StepRecord};
use crate::agents::{Agent, AgentConfig, AgentKind, Experience};
use crate::envs::{Env, EnvBox};
use crate::{Error, Result};

pub const DEFAULT_T_TRAIN_SYNTH: usize = 5000;
pub const DEFAULT_T_TRAIN_RAN: usize = 1500;
pub const DEFAULT_T_INFER: usize = 500;

/// One experiment: an environment template, an agent recipe, phase lengths,
/// and the seeds to run. Each seed gets fresh, independent env/agent state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub env: EnvBox,
    pub kind: AgentKind,
    pub agent: AgentConfig,
    pub t_train: usize,
    pub t_infer: usize,
    pub seeds: Vec<u64>,
    /// Risk level used for action selection during training by the risk-aware
    /// agent. `None` (default) samples uniformly from the training alpha set
    /// each step; baselines ignore it either way.
    #[serde(default)]
    pub train_action_alpha: Option<f64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("experiment needs at least one seed"));
        }
        self.agent.validate()?;
        if self.agent.risk.constraints.len() != self.env.constraints().len() {
            return Err(Error::config("risk profile does not match environment constraints"));
        }
        if let Some(a) = self.train_action_alpha {
            self.agent.constraint_quantiles.index_of(a)?;
        }
        Ok(())
    }

    /// Paper-default spec for an environment.
    pub fn new(env: EnvBox, kind: AgentKind) -> Self {
        let agent = AgentConfig::for_env(&env);
        let t_train = match env {
            EnvBox::Ran(_) => DEFAULT_T_TRAIN_RAN,
            _ => DEFAULT_T_TRAIN_SYNTH,
        };
        ExperimentSpec {
            env,
            kind,
            agent,
            t_train,
            t_infer: DEFAULT_T_INFER,
            seeds: (0..10).collect(),
            train_action_alpha: None,
        }
    }
}

/// Final state of one seed's run, enough to checkpoint or continue it.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub log: RunLog,
    pub agent: Agent,
    pub env: EnvBox,
    /// Context the next step would consume.
    pub context: Vec<f64>,
}

/// Run every seed independently (in parallel) and return the logs in seed
/// order.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<RunLog>> {
    spec.validate()?;
    spec.seeds
        .par_iter()
        .map(|&seed| run_seed(spec, seed).map(|r| r.log))
        .collect()
}

/// One seed's full run.
pub fn run_seed(spec: &ExperimentSpec, seed: u64) -> Result<SeedRun> {
    spec.validate()?;
    let mut env = spec.env.clone();
    let mut context = env.reset(seed);
    let mut agent = Agent::new(spec.kind, &env, spec.agent.clone(), seed)?;
    let defs = env.constraints();
    let epsilon = match &env {
        EnvBox::Ran(r) => Some(r.config().epsilon),
        _ => None,
    };

    let mut records = Vec::with_capacity(spec.t_train + spec.t_infer);
    let mut energies: Vec<f64> = Vec::new();
    let mut gamma = 0.0;
    let mut t = 0;

    for _ in 0..spec.t_train {
        let alphas = match spec.kind {
            AgentKind::Rancb => {
                let a = spec
                    .train_action_alpha
                    .unwrap_or_else(|| agent.sample_train_alpha());
                vec![a; defs.len()]
            }
            _ => spec.agent.risk.alphas(),
        };
        let action = agent.select_action_with_alphas(&context, &alphas, true)?;
        let out = env.step(&action)?;
        if let Some(info) = &out.ran {
            energies.push(info.energy_j);
        }
        for (v, def) in out.constraints.iter().zip(&defs) {
            gamma += def.direction.violation(*v, def.bound);
        }
        records.push(StepRecord {
            t,
            phase: Phase::Train,
            reward: out.reward,
            constraints: out.constraints.clone(),
            gamma,
            action: action.clone(),
        });
        let mut metrics = vec![out.reward];
        metrics.extend(&out.constraints);
        agent.observe(Experience { context: context.clone(), action, metrics })?;
        agent.train_step()?;
        context = out.next_context;
        t += 1;
    }

    run_inference(&mut agent, &mut env, &mut context, spec.t_infer, &mut records, &mut energies, &mut gamma, &mut t)?;

    let log = RunLog::summarize(seed, records, &defs, epsilon, Some(energies));
    Ok(SeedRun { log, agent, env, context })
}

/// Pure inference: deterministic actions at the profile risk levels, no
/// learning, no buffer writes.
#[allow(clippy::too_many_arguments)]
pub fn run_inference(
    agent: &mut Agent,
    env: &mut EnvBox,
    context: &mut Vec<f64>,
    steps: usize,
    records: &mut Vec<StepRecord>,
    energies: &mut Vec<f64>,
    gamma: &mut f64,
    t: &mut usize,
) -> Result<()> {
    let defs = env.constraints();
    let digest_before = agent.param_digest();
    for _ in 0..steps {
        let action = agent.select_action(context, false)?;
        let out = env.step(&action)?;
        if let Some(info) = &out.ran {
            energies.push(info.energy_j);
        }
        for (v, def) in out.constraints.iter().zip(&defs) {
            *gamma += def.direction.violation(*v, def.bound);
        }
        records.push(StepRecord {
            t: *t,
            phase: Phase::Infer,
            reward: out.reward,
            constraints: out.constraints,
            gamma: *gamma,
            action,
        });
        *context = out.next_context;
        *t += 1;
    }
    debug_assert_eq!(digest_before, agent.param_digest(), "inference must not learn");
    Ok(())
}
