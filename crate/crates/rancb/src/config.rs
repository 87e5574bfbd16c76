//! Strict JSON configuration: sections `env`, `agent`, `risk`, `experiment`,
//! `sweep`, `output`. Omitted fields take the evaluation defaults; unknown
//! keys are rejected. Command-line `--override key.path=value` edits apply on
//! the parsed JSON before validation, so every field is addressable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agents::{AgentConfig, AgentKind, RiskProfile};
use crate::distributional::QuantileSet;
use crate::envs::{load_trace, EnvBox, PolynomialDEnv, RanConfig, RanOffloadingEnv, SyntheticQuadraticEnv};
use crate::harness::{ExperimentSpec, SweepAxis, DEFAULT_T_INFER, DEFAULT_T_TRAIN_RAN, DEFAULT_T_TRAIN_SYNTH};
use crate::{Error, Result};

fn default_sigma() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSection {
    Synthetic {
        #[serde(default = "default_sigma")]
        sigma_env: f64,
    },
    Polynomial {
        dim: usize,
        #[serde(default = "default_sigma")]
        sigma_env: f64,
    },
    Ran {
        #[serde(default)]
        config: RanConfig,
        #[serde(default)]
        trace: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentSection {
    pub kind: Option<AgentKind>,
    pub lambda: Option<f64>,
    pub batch_size: Option<usize>,
    pub kappa: Option<f64>,
    pub actor_lr: Option<f64>,
    pub critic_lr: Option<f64>,
    pub buffer_capacity: Option<usize>,
    pub hidden: Option<Vec<usize>>,
    pub ou_theta: Option<f64>,
    pub ou_sigma: Option<f64>,
    /// Number of uniform reward quantiles.
    pub reward_quantiles: Option<usize>,
    /// Explicit constraint quantile set (defaults to the evaluation set for
    /// the constraint direction).
    pub constraint_quantiles: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiskSection {
    /// Enforcement quantile applied to every constraint.
    pub alpha: Option<f64>,
    /// Risk levels the actor trains against.
    pub train_alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub t_train: Option<usize>,
    pub t_infer: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    /// Fixed risk level for training-phase action selection (risk-aware agent
    /// only); omitted = sample uniformly from the training alpha set.
    pub train_action_alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub axis: Option<SweepAxis>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Emit SVG charts alongside tables (default true).
    pub charts: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub env: EnvSection,
    #[serde(default)]
    pub agent: AgentSection,
    #[serde(default)]
    pub risk: RiskSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ConfigFile {
    /// Parse a config file, then apply dotted-path overrides (last wins).
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path)?;
        let mut value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        for (key, raw) in overrides {
            apply_override(&mut value, key, raw)?;
        }
        serde_json::from_value(value).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn from_value(value: Value) -> Result<ConfigFile> {
        serde_json::from_value(value).map_err(|e| Error::config(e.to_string()))
    }

    pub fn build_env(&self) -> Result<EnvBox> {
        Ok(match &self.env {
            EnvSection::Synthetic { sigma_env } => {
                EnvBox::Synthetic(SyntheticQuadraticEnv::new(*sigma_env, 0))
            }
            EnvSection::Polynomial { dim, sigma_env } => {
                EnvBox::Polynomial(PolynomialDEnv::new(*dim, *sigma_env, 0)?)
            }
            EnvSection::Ran { config, trace } => {
                let env = match trace {
                    Some(path) => {
                        let tbs = load_trace(path)?;
                        RanOffloadingEnv::with_trace(config.clone(), tbs, 0)?
                    }
                    None => RanOffloadingEnv::new(config.clone(), 0)?,
                };
                EnvBox::Ran(Box::new(env))
            }
        })
    }

    pub fn agent_kind(&self) -> AgentKind {
        self.agent.kind.unwrap_or(AgentKind::Rancb)
    }

    pub fn build_agent_config(&self, env: &EnvBox) -> Result<AgentConfig> {
        let mut c = AgentConfig::for_env(env);
        let a = &self.agent;
        if let Some(v) = a.lambda {
            c.lambda = v;
        }
        if let Some(v) = a.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = a.kappa {
            c.kappa = v;
        }
        if let Some(v) = a.actor_lr {
            c.actor_lr = v;
        }
        if let Some(v) = a.critic_lr {
            c.critic_lr = v;
        }
        if let Some(v) = a.buffer_capacity {
            c.buffer_capacity = v;
        }
        if let Some(v) = &a.hidden {
            c.hidden = v.clone();
        }
        if let Some(v) = a.ou_theta {
            c.ou_theta = v;
        }
        if let Some(v) = a.ou_sigma {
            c.ou_sigma = v;
        }
        if let Some(n) = a.reward_quantiles {
            if n == 0 {
                return Err(Error::config("agent.reward_quantiles must be >= 1"));
            }
            c.reward_quantiles = QuantileSet::uniform(n);
        }
        if let Some(v) = &a.constraint_quantiles {
            c.constraint_quantiles = QuantileSet::new(v.clone())?;
            // the risk profile must stay inside the new set
            c.risk = RiskProfile {
                constraints: c.risk.constraints,
                train_alphas: c.constraint_quantiles.levels().to_vec(),
            };
            let fallback = *c.constraint_quantiles.levels().last().unwrap();
            for rc in &mut c.risk.constraints {
                if !c.constraint_quantiles.contains(rc.alpha) {
                    rc.alpha = fallback;
                }
            }
        }
        if let Some(alpha) = self.risk.alpha {
            c.constraint_quantiles.index_of(alpha)?;
            c.risk = c.risk.with_alpha(alpha);
        }
        if let Some(train_alphas) = &self.risk.train_alphas {
            c.risk = c.risk.with_train_alphas(train_alphas.clone());
        }
        c.validate()?;
        Ok(c)
    }

    pub fn build_spec(&self) -> Result<ExperimentSpec> {
        let env = self.build_env()?;
        let agent = self.build_agent_config(&env)?;
        let t_train = self.experiment.t_train.unwrap_or(match env {
            EnvBox::Ran(_) => DEFAULT_T_TRAIN_RAN,
            _ => DEFAULT_T_TRAIN_SYNTH,
        });
        let spec = ExperimentSpec {
            env,
            kind: self.agent_kind(),
            agent,
            t_train,
            t_infer: self.experiment.t_infer.unwrap_or(DEFAULT_T_INFER),
            seeds: self.experiment.seeds.clone().unwrap_or_else(|| (0..10).collect()),
            train_action_alpha: self.experiment.train_action_alpha,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn emit_charts(&self) -> bool {
        self.output.charts.unwrap_or(true)
    }

    /// The effective (post-override) config, dumped next to results for
    /// reproducibility.
    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Set `root[key.path] = parsed(value)`, creating intermediate objects. The
/// value is parsed as JSON when possible, else taken as a string.
pub fn apply_override(root: &mut Value, dotted: &str, raw: &str) -> Result<()> {
    if dotted.is_empty() {
        return Err(Error::config("override key must be non-empty"));
    }
    let parsed: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = dotted.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cur.is_object() {
            return Err(Error::config(format!(
                "override {dotted:?}: {:?} is not an object",
                parts[..i].join(".")
            )));
        }
        let map = cur.as_object_mut().unwrap();
        if i + 1 == parts.len() {
            map.insert((*part).to_string(), parsed);
            return Ok(());
        }
        cur = map.entry((*part).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}
