//! The learners: a risk-aware actor with M+1 distributional quantile critics,
//! and the three neural ablation baselines that share its replay buffer,
//! exploration noise, and update machinery.
//!
//! All four agents are contextual-bandit learners: no bootstrapping, no target
//! networks, one train step per environment step, updates only after the
//! buffer holds one full minibatch.

mod buffer;
mod noise;
mod train;

pub use buffer::ReplayBuffer;
pub use noise::OuNoise;

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributional::QuantileSet;
use crate::envs::{ConstraintDef, Direction, Env};
use crate::nn::{AdamState, Mlp, OutputActivation};
use crate::{Error, Result};

/// One interaction record: context, boxed action, and the M+1 observed
/// metrics with the reward at index 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Experience {
    pub context: Vec<f64>,
    pub action: Vec<f64>,
    pub metrics: Vec<f64>,
}

/// Risk configuration for one constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRisk {
    pub bound: f64,
    pub direction: Direction,
    /// Quantile at which this constraint is enforced.
    pub alpha: f64,
}

/// Per-run risk configuration: one entry per constraint plus the set of risk
/// levels the actor trains against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskProfile {
    pub constraints: Vec<ConstraintRisk>,
    /// Risk levels used for actor updates during training; every member must
    /// appear in the constraint critics' quantile set.
    pub train_alphas: Vec<f64>,
}

impl RiskProfile {
    /// Paper-default risk profile for an environment's constraints: upper
    /// bounds are enforced at the 0.995 quantile, lower bounds at 0.005, and
    /// the training set covers the whole constraint quantile set.
    pub fn for_constraints(defs: &[ConstraintDef]) -> Self {
        let lower = defs.iter().any(|d| d.direction == Direction::Lower);
        let set = if lower {
            QuantileSet::lower_constraint_default()
        } else {
            QuantileSet::upper_constraint_default()
        };
        let alpha = if lower { 0.005 } else { 0.995 };
        RiskProfile {
            constraints: defs
                .iter()
                .map(|d| ConstraintRisk { bound: d.bound, direction: d.direction, alpha })
                .collect(),
            train_alphas: set.levels().to_vec(),
        }
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.alpha).collect()
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        for c in &mut self.constraints {
            c.alpha = alpha;
        }
        self
    }

    pub fn with_train_alphas(mut self, alphas: Vec<f64>) -> Self {
        self.train_alphas = alphas;
        self
    }
}

/// Hyperparameters shared by all agent kinds. Defaults are the evaluation
/// settings: `lambda = 2.5`, `B = 64`, `kappa = 1`, actor/critic learning
/// rates `1e-4`/`1e-3`, buffer capacity 2000, two hidden layers of 256 units,
/// 21 uniform reward quantiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentConfig {
    pub lambda: f64,
    pub batch_size: usize,
    pub kappa: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub buffer_capacity: usize,
    pub hidden: Vec<usize>,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub reward_quantiles: QuantileSet,
    pub constraint_quantiles: QuantileSet,
    pub risk: RiskProfile,
}

impl AgentConfig {
    /// Paper defaults for a given environment.
    pub fn for_env(env: &impl Env) -> Self {
        let risk = RiskProfile::for_constraints(&env.constraints());
        let lower = risk.constraints.iter().any(|c| c.direction == Direction::Lower);
        AgentConfig {
            lambda: 2.5,
            batch_size: 64,
            kappa: 1.0,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            buffer_capacity: 2000,
            hidden: vec![256, 256],
            ou_theta: 0.15,
            ou_sigma: 0.15,
            reward_quantiles: QuantileSet::uniform(21),
            constraint_quantiles: if lower {
                QuantileSet::lower_constraint_default()
            } else {
                QuantileSet::upper_constraint_default()
            },
            risk,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda <= 0.0
            || self.batch_size == 0
            || self.kappa <= 0.0
            || self.actor_lr <= 0.0
            || self.critic_lr <= 0.0
            || self.buffer_capacity == 0
        {
            return Err(Error::config("agent hyperparameters must be positive"));
        }
        for alpha in &self.risk.train_alphas {
            self.constraint_quantiles.index_of(*alpha)?;
        }
        for c in &self.risk.constraints {
            self.constraint_quantiles.index_of(c.alpha)?;
        }
        Ok(())
    }
}

/// Which learner to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    /// Risk-aware actor with M+1 distributional critics.
    Rancb,
    /// Single mean critic on the penalized utility.
    Ncb,
    /// Single distributional critic on the penalized utility.
    ScDncb,
    /// M+1 mean critics, aggregation on critic expectations.
    McNcb,
}

impl std::str::FromStr for AgentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rancb" => Ok(AgentKind::Rancb),
            "ncb" => Ok(AgentKind::Ncb),
            "sc-dncb" | "scdncb" => Ok(AgentKind::ScDncb),
            "mc-ncb" | "mcncb" => Ok(AgentKind::McNcb),
            other => Err(Error::config(format!("unknown agent kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AgentKind::Rancb => "rancb",
            AgentKind::Ncb => "ncb",
            AgentKind::ScDncb => "sc-dncb",
            AgentKind::McNcb => "mc-ncb",
        };
        f.write_str(s)
    }
}

/// Aggregate reward: mean-reward estimate minus `lambda`-weighted hinge
/// penalties on the constraint quantile estimates.
///
/// `constraint_quantiles` holds one `(quantile value, bound, direction)` triple
/// per constraint; lower-bound constraints contribute `max(bound - value, 0)`.
pub fn aggregate_reward(
    mean_reward: f64,
    constraint_quantiles: &[(f64, f64, Direction)],
    lambda: f64,
) -> f64 {
    let penalty: f64 = constraint_quantiles
        .iter()
        .map(|&(gamma, bound, dir)| dir.violation(gamma, bound))
        .sum();
    mean_reward - lambda * penalty
}

/// Penalized scalar utility on observed metric values.
pub fn ncb_utility(reward: f64, constraints: &[(f64, f64, Direction)], lambda: f64) -> f64 {
    aggregate_reward(reward, constraints, lambda)
}

/// Per-train-step diagnostics.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LossReport {
    pub critic_losses: Vec<f64>,
    pub actor_updates: usize,
}

/// One critic: a network plus its optimizer and (for distributional critics)
/// its quantile set. `quantiles = None` means a scalar mean critic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Critic {
    pub net: Mlp,
    pub opt: AdamState,
    pub quantiles: Option<QuantileSet>,
}

/// A learner instance. Single-threaded by construction; independent instances
/// share no state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Agent {
    kind: AgentKind,
    config: AgentConfig,
    context_dim: usize,
    action_dim: usize,
    action_lo: Vec<f64>,
    action_hi: Vec<f64>,
    actor: Mlp,
    actor_opt: AdamState,
    critics: Vec<Critic>,
    buffer: ReplayBuffer,
    noise: OuNoise,
    rng: ChaCha8Rng,
    discarded_nonfinite: u64,
    train_steps: u64,
}

impl Agent {
    pub fn new(kind: AgentKind, env: &impl Env, config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let context_dim = env.context_dim();
        let action_dim = env.action_dim();
        let (lo, hi) = env.action_box();
        let m = config.risk.constraints.len();
        if m != env.constraints().len() {
            return Err(Error::config(format!(
                "risk profile covers {m} constraints but the environment has {}",
                env.constraints().len()
            )));
        }
        let mut rng = crate::harness::seeded_rng(seed, crate::harness::STREAM_AGENT);

        // actor: alpha-conditioned input only for the risk-aware agent
        let actor_in = match kind {
            AgentKind::Rancb => context_dim + m,
            _ => context_dim,
        };
        let mut actor_sizes = vec![actor_in];
        actor_sizes.extend(&config.hidden);
        actor_sizes.push(action_dim);
        let squash = OutputActivation::Squash {
            lo: ndarray::Array1::from(lo.clone()),
            hi: ndarray::Array1::from(hi.clone()),
        };
        let actor = Mlp::new(&actor_sizes, squash, &mut rng)?;
        let actor_opt = AdamState::new(actor.param_count(), config.actor_lr);

        // critics, reward first
        let critic_in = context_dim + action_dim;
        let mut critics = Vec::new();
        let mut push_critic = |sets: Option<QuantileSet>, rng: &mut ChaCha8Rng| -> Result<()> {
            let out = sets.as_ref().map_or(1, |s| s.len());
            let mut sizes = vec![critic_in];
            sizes.extend(&config.hidden);
            sizes.push(out);
            let net = Mlp::new(&sizes, OutputActivation::Linear, rng)?;
            let opt = AdamState::new(net.param_count(), config.critic_lr);
            critics.push(Critic { net, opt, quantiles: sets });
            Ok(())
        };
        match kind {
            AgentKind::Rancb => {
                push_critic(Some(config.reward_quantiles.clone()), &mut rng)?;
                for _ in 0..m {
                    push_critic(Some(config.constraint_quantiles.clone()), &mut rng)?;
                }
            }
            AgentKind::Ncb => push_critic(None, &mut rng)?,
            AgentKind::ScDncb => push_critic(Some(config.reward_quantiles.clone()), &mut rng)?,
            AgentKind::McNcb => {
                for _ in 0..=m {
                    push_critic(None, &mut rng)?;
                }
            }
        }

        let buffer = ReplayBuffer::new(config.buffer_capacity);
        let noise = OuNoise::new(action_dim, config.ou_theta, config.ou_sigma);
        Ok(Agent {
            kind,
            config,
            context_dim,
            action_dim,
            action_lo: lo,
            action_hi: hi,
            actor,
            actor_opt,
            critics,
            buffer,
            noise,
            rng,
            discarded_nonfinite: 0,
            train_steps: 0,
        })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn discarded_nonfinite(&self) -> u64 {
        self.discarded_nonfinite
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critics(&self) -> &[Critic] {
        &self.critics
    }

    /// Re-point every constraint's enforcement quantile, e.g. to modulate risk
    /// at inference time without retraining. Membership in the constraint
    /// quantile set is validated.
    pub fn set_risk_alpha(&mut self, alpha: f64) -> Result<()> {
        self.config.constraint_quantiles.index_of(alpha)?;
        for c in &mut self.config.risk.constraints {
            c.alpha = alpha;
        }
        Ok(())
    }

    /// Zero every actor parameter; a zeroed squashed actor emits the
    /// action-box midpoint for any context. Test hook.
    #[doc(hidden)]
    pub fn zero_actor(&mut self) {
        let zeros = vec![0.0; self.actor.param_count()];
        self.actor.set_params_flat(&zeros).expect("zeroing preserves shape");
    }

    /// Fingerprint of all learnable parameters, used by inference-purity checks.
    pub fn param_digest(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut mix = |v: f64| {
            h ^= v.to_bits();
            h = h.wrapping_mul(0x100_0000_01b3);
        };
        self.actor.params_flat().iter().copied().for_each(&mut mix);
        for c in &self.critics {
            c.net.params_flat().iter().copied().for_each(&mut mix);
        }
        h
    }

    /// Deterministic action at the profile's per-constraint risk levels, with
    /// optional exploration noise (clipped back into the action box).
    pub fn select_action(&mut self, context: &[f64], explore: bool) -> Result<Vec<f64>> {
        let alphas = self.config.risk.alphas();
        self.select_action_with_alphas(context, &alphas, explore)
    }

    /// Like [`Self::select_action`] but at explicit risk levels. Only the
    /// risk-aware agent is conditioned on them; baselines ignore the vector.
    pub fn select_action_with_alphas(
        &mut self,
        context: &[f64],
        alphas: &[f64],
        explore: bool,
    ) -> Result<Vec<f64>> {
        if context.len() != self.context_dim {
            return Err(Error::Shape {
                expected: self.context_dim,
                got: context.len(),
                context: "select_action context",
            });
        }
        let input = self.actor_input(context, alphas)?;
        let mut action = self.actor.forward(&input)?;
        if explore {
            let perturb = self.noise.step(&mut self.rng);
            for ((a, n), (lo, hi)) in action
                .iter_mut()
                .zip(perturb)
                .zip(self.action_lo.iter().zip(&self.action_hi))
            {
                *a = (*a + n).clamp(*lo, *hi);
            }
        }
        Ok(action)
    }

    fn actor_input(&self, context: &[f64], alphas: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            AgentKind::Rancb => {
                let m = self.config.risk.constraints.len();
                if alphas.len() != m {
                    return Err(Error::Shape {
                        expected: m,
                        got: alphas.len(),
                        context: "risk-level vector",
                    });
                }
                for a in alphas {
                    self.config.constraint_quantiles.index_of(*a)?;
                }
                let mut v = context.to_vec();
                v.extend_from_slice(alphas);
                Ok(v)
            }
            _ => Ok(context.to_vec()),
        }
    }

    /// Store one experience. Non-finite observations are discarded and counted.
    pub fn observe(&mut self, exp: Experience) -> Result<()> {
        let m = self.config.risk.constraints.len();
        if exp.metrics.len() != m + 1 {
            return Err(Error::Shape {
                expected: m + 1,
                got: exp.metrics.len(),
                context: "experience metrics",
            });
        }
        let finite = exp.metrics.iter().all(|v| v.is_finite())
            && exp.context.iter().all(|v| v.is_finite())
            && exp.action.iter().all(|v| v.is_finite());
        if !finite {
            self.discarded_nonfinite += 1;
            return Ok(());
        }
        self.buffer.push(exp);
        Ok(())
    }

    /// One gradient update on a sampled minibatch. Returns `None` while the
    /// buffer is still warming up (fewer samples than one minibatch).
    pub fn train_step(&mut self) -> Result<Option<LossReport>> {
        if self.buffer.len() < self.config.batch_size {
            return Ok(None);
        }
        let idx = self.buffer.sample_indices(&mut self.rng, self.config.batch_size);
        let report = self.train_on_indices(&idx)?;
        self.train_steps += 1;
        Ok(Some(report))
    }

    /// Gather minibatch matrices (contexts, actions, metrics) by buffer index.
    fn gather(&self, idx: &[usize]) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let b = idx.len();
        let m1 = self.config.risk.constraints.len() + 1;
        let mut s = Array2::zeros((b, self.context_dim));
        let mut a = Array2::zeros((b, self.action_dim));
        let mut c = Array2::zeros((b, m1));
        for (row, &i) in idx.iter().enumerate() {
            let e = self.buffer.get(i);
            for (j, v) in e.context.iter().enumerate() {
                s[(row, j)] = *v;
            }
            for (j, v) in e.action.iter().enumerate() {
                a[(row, j)] = *v;
            }
            for (j, v) in e.metrics.iter().enumerate() {
                c[(row, j)] = *v;
            }
        }
        (s, a, c)
    }

    fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
