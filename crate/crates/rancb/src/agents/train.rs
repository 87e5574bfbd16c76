//! Minibatch update rules for every agent kind.
//!
//! Critic updates regress each critic on its observed target (quantile Huber
//! loss for distributional critics, squared error for mean critics). Actor
//! updates are deterministic policy-gradient ascent: the aggregate objective's
//! gradient with respect to the action is read off the frozen critics and
//! chained through the actor. Critic parameters never move during an actor
//! step.

use ndarray::{concatenate, Array2, Axis};
use rand::Rng;

use super::{Agent, AgentKind, Critic, LossReport};
use crate::distributional::{critic_loss, quantile_huber_deriv};
use crate::envs::Direction;
use crate::nn::adam_update;
use crate::Result;

/// Quantile-Huber regression step for one distributional critic.
/// Returns the batch-mean critic loss.
fn update_dist_critic(
    critic: &mut Critic,
    x: &Array2<f64>,
    targets: &[f64],
    kappa: f64,
) -> Result<f64> {
    let set = critic.quantiles.clone().expect("distributional critic");
    let b = x.nrows();
    let preds = critic.net.forward_batch(x);
    let mut upstream = Array2::zeros(preds.dim());
    let mut loss = 0.0;
    for (row, &target) in targets.iter().enumerate() {
        let pred_row: Vec<f64> = preds.row(row).to_vec();
        loss += critic_loss(&pred_row, target, &set, kappa)?;
        for (j, (&tau, &p)) in set.levels().iter().zip(&pred_row).enumerate() {
            // d/d pred of quantile_huber(target - pred)
            upstream[(row, j)] = -quantile_huber_deriv(target - p, tau, kappa) / b as f64;
        }
    }
    let (grads, _) = critic.net.backward_batch(x, &upstream);
    adam_update(&mut critic.opt, &mut critic.net, &grads)?;
    Ok(loss / b as f64)
}

/// Squared-error regression step for one scalar mean critic.
/// Returns the batch-mean half squared error.
fn update_mean_critic(critic: &mut Critic, x: &Array2<f64>, targets: &[f64]) -> Result<f64> {
    let b = x.nrows();
    let preds = critic.net.forward_batch(x);
    let mut upstream = Array2::zeros(preds.dim());
    let mut loss = 0.0;
    for (row, &target) in targets.iter().enumerate() {
        let err = preds[(row, 0)] - target;
        loss += 0.5 * err * err;
        upstream[(row, 0)] = err / b as f64;
    }
    let (grads, _) = critic.net.backward_batch(x, &upstream);
    adam_update(&mut critic.opt, &mut critic.net, &grads)?;
    Ok(loss / b as f64)
}

impl Agent {
    /// One full update (all critics, then the actor) on the given buffer rows.
    pub(super) fn train_on_indices(&mut self, idx: &[usize]) -> Result<LossReport> {
        let (s, a, metrics) = self.gather(idx);
        let x = concatenate(Axis(1), &[s.view(), a.view()]).unwrap();

        let mut report = LossReport::default();
        match self.kind {
            AgentKind::Rancb | AgentKind::McNcb => {
                // one critic per metric, reward first
                for (i, critic) in self.critics.iter_mut().enumerate() {
                    let targets: Vec<f64> = metrics.column(i).to_vec();
                    let loss = if critic.quantiles.is_some() {
                        update_dist_critic(critic, &x, &targets, self.config.kappa)?
                    } else {
                        update_mean_critic(critic, &x, &targets)?
                    };
                    report.critic_losses.push(loss);
                }
            }
            AgentKind::Ncb | AgentKind::ScDncb => {
                // single critic on the penalized utility of observed metrics
                let targets: Vec<f64> = metrics
                    .rows()
                    .into_iter()
                    .map(|row| {
                        let triples: Vec<(f64, f64, Direction)> = self
                            .config
                            .risk
                            .constraints
                            .iter()
                            .enumerate()
                            .map(|(j, c)| (row[j + 1], c.bound, c.direction))
                            .collect();
                        super::ncb_utility(row[0], &triples, self.config.lambda)
                    })
                    .collect();
                let critic = &mut self.critics[0];
                let loss = if critic.quantiles.is_some() {
                    update_dist_critic(critic, &x, &targets, self.config.kappa)?
                } else {
                    update_mean_critic(critic, &x, &targets)?
                };
                report.critic_losses.push(loss);
            }
        }

        match self.kind {
            AgentKind::Rancb => {
                for alpha in self.config.risk.train_alphas.clone() {
                    self.actor_step(&s, alpha)?;
                    report.actor_updates += 1;
                }
            }
            _ => {
                self.actor_step(&s, f64::NAN)?; // alpha unused by baselines
                report.actor_updates += 1;
            }
        }
        Ok(report)
    }

    /// Gradient-ascent step on the actor at risk level `alpha` (ignored by the
    /// baselines). Critics are read-only here.
    pub(super) fn actor_step(&mut self, s: &Array2<f64>, alpha: f64) -> Result<()> {
        let b = s.nrows();
        let actor_in = self.batch_actor_input(s, alpha);
        let a = self.actor.forward_batch(&actor_in);
        let x = concatenate(Axis(1), &[s.view(), a.view()]).unwrap();

        // chain d_obj/da through the actor and ascend the batch-mean objective
        let d_obj_da = self.objective_action_grad(&x, alpha)?;
        let (mut grads, _) = self.actor.backward_batch(&actor_in, &d_obj_da);
        grads.scale(-1.0 / b as f64);
        adam_update(&mut self.actor_opt, &mut self.actor, &grads)
    }

    /// Actor input rows: context, plus a uniform risk-level vector for the
    /// risk-aware agent.
    pub(super) fn batch_actor_input(&self, s: &Array2<f64>, alpha: f64) -> Array2<f64> {
        match self.kind {
            AgentKind::Rancb => {
                let m = self.config.risk.constraints.len();
                let alphas = Array2::from_elem((s.nrows(), m), alpha);
                concatenate(Axis(1), &[s.view(), alphas.view()]).unwrap()
            }
            _ => s.clone(),
        }
    }

    /// Gradient of the per-sample objective with respect to the action, read
    /// from the frozen critics at critic input `x = [context, action]`.
    pub(super) fn objective_action_grad(&self, x: &Array2<f64>, alpha: f64) -> Result<Array2<f64>> {
        let b = x.nrows();
        let mut d_obj = Array2::zeros((b, self.action_dim));
        match self.kind {
            AgentKind::Rancb => {
                // reward critic: mean over quantiles
                let set = self.critics[0].quantiles.as_ref().unwrap();
                let upstream = Array2::from_elem((b, set.len()), 1.0 / set.len() as f64);
                accumulate_action_grad(&mut d_obj, &self.critics[0].net.input_grad_batch(x, &upstream), self.context_dim);
                // constraint critics: hinge on the alpha-quantile column
                for (i, risk) in self.config.risk.constraints.iter().enumerate() {
                    let critic = &self.critics[i + 1];
                    let set = critic.quantiles.as_ref().unwrap();
                    let col = set.index_of(alpha)?;
                    let preds = critic.net.forward_batch(x);
                    let mut upstream = Array2::zeros((b, set.len()));
                    for row in 0..b {
                        let gamma = preds[(row, col)];
                        upstream[(row, col)] = hinge_obj_grad(gamma, risk.bound, risk.direction, self.config.lambda);
                    }
                    accumulate_action_grad(&mut d_obj, &critic.net.input_grad_batch(x, &upstream), self.context_dim);
                }
            }
            AgentKind::Ncb => {
                let upstream = Array2::from_elem((b, 1), 1.0);
                accumulate_action_grad(&mut d_obj, &self.critics[0].net.input_grad_batch(x, &upstream), self.context_dim);
            }
            AgentKind::ScDncb => {
                let set = self.critics[0].quantiles.as_ref().unwrap();
                let upstream = Array2::from_elem((b, set.len()), 1.0 / set.len() as f64);
                accumulate_action_grad(&mut d_obj, &self.critics[0].net.input_grad_batch(x, &upstream), self.context_dim);
            }
            AgentKind::McNcb => {
                let upstream = Array2::from_elem((b, 1), 1.0);
                accumulate_action_grad(&mut d_obj, &self.critics[0].net.input_grad_batch(x, &upstream), self.context_dim);
                for (i, risk) in self.config.risk.constraints.iter().enumerate() {
                    let critic = &self.critics[i + 1];
                    let preds = critic.net.forward_batch(x);
                    let mut upstream = Array2::zeros((b, 1));
                    for row in 0..b {
                        upstream[(row, 0)] = hinge_obj_grad(preds[(row, 0)], risk.bound, risk.direction, self.config.lambda);
                    }
                    accumulate_action_grad(&mut d_obj, &critic.net.input_grad_batch(x, &upstream), self.context_dim);
                }
            }
        }
        Ok(d_obj)
    }

    /// Batch-mean actor objective at risk level `alpha`, holding the critics
    /// fixed. This is the quantity [`Self::train_on_indices`] ascends; exposed
    /// for finite-difference validation of the actor update direction.
    pub fn actor_objective(&self, s: &Array2<f64>, alpha: f64) -> Result<f64> {
        let b = s.nrows();
        let actor_in = self.batch_actor_input(s, alpha);
        let a = self.actor.forward_batch(&actor_in);
        let x = concatenate(Axis(1), &[s.view(), a.view()]).unwrap();
        let mut total = 0.0;
        match self.kind {
            AgentKind::Rancb => {
                let preds0 = self.critics[0].net.forward_batch(&x);
                for row in 0..b {
                    total += preds0.row(row).mean().unwrap();
                }
                for (i, risk) in self.config.risk.constraints.iter().enumerate() {
                    let critic = &self.critics[i + 1];
                    let set = critic.quantiles.as_ref().unwrap();
                    let col = set.index_of(alpha)?;
                    let preds = critic.net.forward_batch(&x);
                    for row in 0..b {
                        total -= self.config.lambda
                            * risk.direction.violation(preds[(row, col)], risk.bound);
                    }
                }
            }
            AgentKind::Ncb => {
                let preds = self.critics[0].net.forward_batch(&x);
                total = preds.column(0).sum();
            }
            AgentKind::ScDncb => {
                let preds = self.critics[0].net.forward_batch(&x);
                for row in 0..b {
                    total += preds.row(row).mean().unwrap();
                }
            }
            AgentKind::McNcb => {
                let preds0 = self.critics[0].net.forward_batch(&x);
                total = preds0.column(0).sum();
                for (i, risk) in self.config.risk.constraints.iter().enumerate() {
                    let preds = self.critics[i + 1].net.forward_batch(&x);
                    for row in 0..b {
                        total -= self.config.lambda
                            * risk.direction.violation(preds[(row, 0)], risk.bound);
                    }
                }
            }
        }
        Ok(total / b as f64)
    }

    /// Flattened ascent gradient of [`Self::actor_objective`] with respect to
    /// the actor parameters (critics frozen); exposed for finite-difference
    /// validation of the policy-gradient chain.
    #[doc(hidden)]
    pub fn actor_param_grad(&self, s: &Array2<f64>, alpha: f64) -> Result<Vec<f64>> {
        let b = s.nrows();
        let actor_in = self.batch_actor_input(s, alpha);
        let a = self.actor.forward_batch(&actor_in);
        let x = concatenate(Axis(1), &[s.view(), a.view()]).unwrap();
        let d_obj_da = self.objective_action_grad(&x, alpha)?;
        let (mut grads, _) = self.actor.backward_batch(&actor_in, &d_obj_da);
        grads.scale(1.0 / b as f64);
        Ok(grads.flatten())
    }

    /// Mutable actor access for finite-difference probes.
    #[doc(hidden)]
    pub fn actor_net_mut(&mut self) -> &mut crate::nn::Mlp {
        &mut self.actor
    }

    /// Minimum distance of every network in the agent to a rectifier kink at
    /// the given contexts (actor at risk level `alpha`, critics at the
    /// resulting `[context, action]`). Used to filter finite-difference checks.
    pub fn kink_margin(&self, s: &Array2<f64>, alpha: f64) -> f64 {
        let actor_in = self.batch_actor_input(s, alpha);
        let a = self.actor.forward_batch(&actor_in);
        let x = concatenate(Axis(1), &[s.view(), a.view()]).unwrap();
        let mut margin = self.actor.hidden_kink_margin(&actor_in);
        for c in &self.critics {
            margin = margin.min(c.net.hidden_kink_margin(&x));
        }
        margin
    }

    /// Hinge activation distance: smallest |quantile estimate - bound| over the
    /// constraint critics at the given contexts. Finite differences are also
    /// invalid near the penalty kink.
    pub fn hinge_margin(&self, s: &Array2<f64>, alpha: f64) -> f64 {
        let actor_in = self.batch_actor_input(s, alpha);
        let a = self.actor.forward_batch(&actor_in);
        let x = concatenate(Axis(1), &[s.view(), a.view()]).unwrap();
        let mut margin = f64::INFINITY;
        for (i, risk) in self.config.risk.constraints.iter().enumerate() {
            let (critic, col) = match self.kind {
                AgentKind::Rancb => {
                    let c = &self.critics[i + 1];
                    let col = c.quantiles.as_ref().unwrap().index_of(alpha).unwrap_or(0);
                    (c, col)
                }
                AgentKind::McNcb => (&self.critics[i + 1], 0),
                _ => continue,
            };
            let preds = critic.net.forward_batch(&x);
            for row in 0..x.nrows() {
                margin = margin.min((preds[(row, col)] - risk.bound).abs());
            }
        }
        margin
    }

    /// A risk level drawn uniformly from the training set, used when rolling
    /// out the risk-aware agent during training.
    pub fn sample_train_alpha(&mut self) -> f64 {
        let n = self.config.risk.train_alphas.len();
        let i = self.rng_mut().gen_range(0..n);
        self.config.risk.train_alphas[i]
    }
}

/// `d objective / d gamma` for one hinge term at quantile estimate `gamma`.
fn hinge_obj_grad(gamma: f64, bound: f64, direction: Direction, lambda: f64) -> f64 {
    match direction {
        Direction::Upper => {
            if gamma > bound {
                -lambda
            } else {
                0.0
            }
        }
        Direction::Lower => {
            if gamma < bound {
                lambda
            } else {
                0.0
            }
        }
    }
}

/// Add the action block (trailing `action_dim` columns) of a critic input
/// gradient into the objective gradient.
fn accumulate_action_grad(d_obj: &mut Array2<f64>, dx: &Array2<f64>, context_dim: usize) {
    let action_dim = d_obj.ncols();
    for row in 0..d_obj.nrows() {
        for j in 0..action_dim {
            d_obj[(row, j)] += dx[(row, context_dim + j)];
        }
    }
}
