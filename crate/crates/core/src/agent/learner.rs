use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::policy::actor_output_grad;
use super::{draw, squash, PolicyHead, PolicySample, ReplayBuffer, Transition};
use crate::critic::{soft_bellman_targets, soft_update, CriticEnsemble, CriticLoss};
use crate::explorer::{behavior_policy, BehaviorDiagnostics, ExplorationConfig};
use crate::nn::{Adam, AdamConfig, Matrix};
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub obs_dim: usize,
    pub action_dim: usize,
    /// Hidden layer widths shared by the actor and both critics.
    pub hidden: Vec<usize>,
    pub quantiles: usize,
    pub critic_loss: CriticLoss,
    pub gamma: f64,
    /// Soft-update rate of the target networks.
    pub tau: f64,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub entropy_coeff: f64,
    pub exploration: ExplorationConfig,
}

impl AgentConfig {
    /// Standard settings for the given observation and action sizes.
    pub fn new(obs_dim: usize, action_dim: usize) -> Self {
        Self {
            obs_dim,
            action_dim,
            hidden: vec![64, 64],
            quantiles: 20,
            critic_loss: CriticLoss::Quantile,
            gamma: 0.99,
            tau: 5e-3,
            adam: AdamConfig::default(),
            batch_size: 256,
            buffer_capacity: 100_000,
            entropy_coeff: 0.2,
            exploration: ExplorationConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.obs_dim == 0 {
            return Err(Error::Config("observation dim", 1, 0));
        }
        if self.action_dim == 0 {
            return Err(Error::Config("action dim", 1, 0));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size", 1, 0));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::OutOfRange("gamma", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::OutOfRange("tau", self.tau));
        }
        if !(self.entropy_coeff >= 0.0 && self.entropy_coeff.is_finite()) {
            return Err(Error::OutOfRange("entropy coefficient", self.entropy_coeff));
        }
        if !(self.adam.learning_rate >= 0.0 && self.adam.learning_rate.is_finite()) {
            return Err(Error::OutOfRange("learning rate", self.adam.learning_rate));
        }
        self.exploration.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// Sample from the optimistic behavior policy.
    Explore,
    /// Take `tanh(μ_φ)`.
    Exploit,
}

/// An action together with how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Chosen {
    pub sample: PolicySample,
    /// Present for explore-mode actions.
    pub diagnostics: Option<BehaviorDiagnostics>,
}

/// Actor, target actor, clipped-double critics and replay memory.
#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    policy: PolicyHead,
    policy_target: PolicyHead,
    policy_optim: Adam,
    critics: CriticEnsemble,
    buffer: ReplayBuffer,
    rng: rng::Rng,
    updates: u64,
}

impl Agent {
    /// Initialises networks from the seed's init stream; sampling during
    /// training draws from its agent stream.
    pub fn new(config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut init = rng::stream(seed, Stream::Init);
        let policy = PolicyHead::new(config.obs_dim, config.action_dim, &config.hidden, &mut init)?;
        let critics = CriticEnsemble::new(
            config.obs_dim + config.action_dim,
            &config.hidden,
            config.quantiles,
            config.adam,
            config.critic_loss,
            &mut init,
        )?;
        Self::from_parts(config, policy, critics, rng::stream(seed, Stream::Agent))
    }

    pub fn from_parts(
        config: AgentConfig,
        policy: PolicyHead,
        critics: CriticEnsemble,
        rng: rng::Rng,
    ) -> Result<Self> {
        config.validate()?;
        if policy.obs_dim() != config.obs_dim || policy.action_dim() != config.action_dim {
            return Err(Error::Usage(
                "policy does not match the configured dimensions",
            ));
        }
        if critics.input_dim() != config.obs_dim + config.action_dim {
            return Err(Error::Config(
                "critic input width",
                config.obs_dim + config.action_dim,
                critics.input_dim(),
            ));
        }
        Ok(Self {
            policy_optim: Adam::new(config.adam, policy.network().num_params()),
            policy_target: policy.clone(),
            buffer: ReplayBuffer::new(config.buffer_capacity)?,
            policy,
            critics,
            config,
            rng,
            updates: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn policy(&self) -> &PolicyHead {
        &self.policy
    }

    pub fn policy_target(&self) -> &PolicyHead {
        &self.policy_target
    }

    pub fn critics(&self) -> &CriticEnsemble {
        &self.critics
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn rng_mut(&mut self) -> &mut rng::Rng {
        &mut self.rng
    }

    pub fn sample_action(&mut self, state: &[f64], mode: ActionMode) -> Result<Chosen> {
        let (mean, std) = self.policy.gaussian(state)?;
        match mode {
            ActionMode::Exploit => {
                let action = mean.iter().map(|&u| squash(u)).collect();
                let sample = PolicySample {
                    action,
                    raw_action: mean,
                    log_prob: 0.0,
                };
                Ok(Chosen {
                    sample,
                    diagnostics: None,
                })
            }
            ActionMode::Explore => {
                let k = self.config.exploration.k_samples;
                let z_eps: Vec<f64> = (0..k)
                    .map(|_| StandardNormal.sample(&mut self.rng))
                    .collect();
                let behavior = behavior_policy(
                    state,
                    &mean,
                    &std,
                    &self.critics,
                    &self.config.exploration,
                    &z_eps,
                )?;
                let eps: Vec<f64> = (0..mean.len())
                    .map(|_| StandardNormal.sample(&mut self.rng))
                    .collect();
                let sample = draw(&behavior.mean, &behavior.std, &eps);
                Ok(Chosen {
                    sample,
                    diagnostics: Some(behavior.diagnostics),
                })
            }
        }
    }

    /// Uniform action from the action box.
    pub fn random_action(&mut self) -> PolicySample {
        let action: Vec<f64> = (0..self.config.action_dim)
            .map(|_| self.rng.random_range(-1.0..=1.0))
            .collect();
        let raw_action = action
            .iter()
            .map(|&a: &f64| libm::atanh(a.clamp(-0.999_999, 0.999_999)))
            .collect();
        PolicySample {
            action,
            raw_action,
            log_prob: 0.0,
        }
    }

    pub fn observe(&mut self, transition: Transition) {
        self.buffer.push(transition);
    }

    /// Whether the buffer holds enough transitions for one batch.
    pub fn ready(&self) -> bool {
        self.buffer.len() >= self.config.batch_size
    }

    /// One critic step, one actor step, then target soft updates. Returns
    /// the two critic losses and the actor loss.
    pub fn update(&mut self) -> Result<([f64; 2], f64)> {
        let batch = self.buffer.sample(self.config.batch_size, &mut self.rng)?;
        let critic_losses = critic_update(
            &batch,
            &mut self.critics,
            &self.policy_target,
            self.config.gamma,
            self.config.entropy_coeff,
            &mut self.rng,
        )?;
        let actor_loss = actor_update(
            &batch,
            &mut self.policy,
            &mut self.policy_optim,
            &self.critics,
            self.config.entropy_coeff,
            &mut self.rng,
        )?;
        self.critics.soft_update_targets(self.config.tau)?;
        soft_update(
            self.policy_target.network_mut(),
            self.policy.network(),
            self.config.tau,
        )?;
        self.updates += 1;
        Ok((critic_losses, actor_loss))
    }
}

/// A differentiable action-value function `Q(s, a)`.
pub trait ActionValue {
    /// Values of every `(state, action)` row of `inputs`, whose first
    /// `obs_dim` columns hold the state, and `∂Q/∂a` for each row.
    fn value_and_action_grad(&self, inputs: &Matrix, obs_dim: usize) -> Result<(Vec<f64>, Matrix)>;
}

/// `Q` is the smaller of the two online critics' quantile means; gradients
/// flow only through the critic attaining the minimum.
impl ActionValue for CriticEnsemble {
    fn value_and_action_grad(&self, inputs: &Matrix, obs_dim: usize) -> Result<(Vec<f64>, Matrix)> {
        let rows = inputs.rows();
        let act = inputs.cols() - obs_dim;
        let nets = self.online();
        let n = self.quantiles() as f64;
        let tapes = [
            nets[0].record(inputs.clone())?,
            nets[1].record(inputs.clone())?,
        ];
        let mut q = Vec::with_capacity(rows);
        let mut chosen = vec![0usize; rows];
        for (r, c) in chosen.iter_mut().enumerate() {
            let q0 = tapes[0].output().row(r).iter().sum::<f64>() / n;
            let q1 = tapes[1].output().row(r).iter().sum::<f64>() / n;
            *c = usize::from(q1 < q0);
            q.push(q0.min(q1));
        }
        let mut grad = Matrix::zeros(rows, act);
        for (k, tape) in tapes.into_iter().enumerate() {
            if !chosen.contains(&k) {
                continue;
            }
            let mut d_out = Matrix::zeros(rows, self.quantiles());
            for r in (0..rows).filter(|&r| chosen[r] == k) {
                d_out.row_mut(r).iter_mut().for_each(|g| *g = 1.0 / n);
            }
            let d_in = nets[k].backward_input(tape, &d_out)?;
            for r in (0..rows).filter(|&r| chosen[r] == k) {
                grad.row_mut(r).copy_from_slice(&d_in.row(r)[obs_dim..]);
            }
        }
        Ok((q, grad))
    }
}

fn stack_rows<'a>(
    rows: impl ExactSizeIterator<Item = (&'a [f64], &'a [f64])>,
    width: usize,
) -> Matrix {
    let n = rows.len();
    let mut data = Vec::with_capacity(n * width);
    for (a, b) in rows {
        data.extend_from_slice(a);
        data.extend_from_slice(b);
    }
    Matrix::from_vec(n, width, data).expect("rows share a width")
}

/// One Adam step of both critics on the quantile loss against targets
/// bootstrapped from the target critics at actions drawn from `target_policy`.
pub fn critic_update<R: Rng + ?Sized>(
    batch: &[&Transition],
    ensemble: &mut CriticEnsemble,
    target_policy: &PolicyHead,
    gamma: f64,
    entropy_coeff: f64,
    rng: &mut R,
) -> Result<[f64; 2]> {
    if batch.is_empty() {
        return Err(Error::Usage("empty batch"));
    }
    let width = ensemble.input_dim();
    let n = ensemble.quantiles();
    let mut targets = Matrix::zeros(batch.len(), n);
    if gamma == 0.0 || batch.iter().all(|t| t.done) {
        for (r, t) in batch.iter().enumerate() {
            targets.row_mut(r).fill(t.reward);
        }
    } else {
        let obs_dim = batch[0].next_state.len();
        let next_states = Matrix::from_vec(
            batch.len(),
            obs_dim,
            batch
                .iter()
                .flat_map(|t| t.next_state.iter().copied())
                .collect(),
        )?;
        let (next_actions, next_log_probs) = target_policy.sample_batch(&next_states, rng)?;
        let next_inputs = stack_rows(
            batch
                .iter()
                .enumerate()
                .map(|(r, t)| (t.next_state.as_slice(), next_actions.row(r))),
            width,
        );
        let [z1, z2] = ensemble.target_batch(&next_inputs)?;
        for (r, t) in batch.iter().enumerate() {
            soft_bellman_targets(
                t.reward,
                t.done,
                gamma,
                entropy_coeff,
                [z1.row(r), z2.row(r)],
                next_log_probs[r],
                targets.row_mut(r),
            );
        }
    }
    if targets.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("td target"));
    }
    let inputs = stack_rows(
        batch
            .iter()
            .map(|t| (t.state.as_slice(), t.action.as_slice())),
        width,
    );
    ensemble.update(&inputs, &targets)
}

/// One Adam step of the policy on `mean[α·log π(a|s) − Q(s, a)]` with
/// reparameterised actions.
/// Returns the objective before the step.
pub fn actor_update<C: ActionValue + ?Sized, R: Rng + ?Sized>(
    batch: &[&Transition],
    head: &mut PolicyHead,
    optim: &mut Adam,
    critic: &C,
    entropy_coeff: f64,
    rng: &mut R,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Usage("empty batch"));
    }
    let rows = batch.len();
    let act = head.action_dim();
    let obs_dim = head.obs_dim();
    let states = Matrix::from_vec(
        rows,
        obs_dim,
        batch.iter().flat_map(|t| t.state.iter().copied()).collect(),
    )?;
    let tape = head.network().record(states)?;
    let out = tape.output().clone();
    let mut eps = Matrix::zeros(rows, act);
    eps.as_mut_slice()
        .iter_mut()
        .for_each(|e| *e = StandardNormal.sample(rng));

    let mut log_probs = vec![0.0; rows];
    let mut inputs = Matrix::zeros(rows, obs_dim + act);
    let mut std = vec![0.0; act];
    for r in 0..rows {
        let o = out.row(r);
        for d in 0..act {
            std[d] = libm::exp(o[act + d].clamp(super::LOG_STD_MIN, super::LOG_STD_MAX));
        }
        let s = draw(&o[..act], &std, eps.row(r));
        log_probs[r] = s.log_prob;
        let row = inputs.row_mut(r);
        row[..obs_dim].copy_from_slice(batch[r].state.as_slice());
        row[obs_dim..].copy_from_slice(&s.action);
    }

    let (q, dq_da) = critic.value_and_action_grad(&inputs, obs_dim)?;
    let scale = 1.0 / rows as f64;
    let objective = scale
        * (0..rows)
            .map(|r| entropy_coeff * log_probs[r] - q[r])
            .sum::<f64>();
    let mut d_obj_da = dq_da;
    d_obj_da
        .as_mut_slice()
        .iter_mut()
        .for_each(|g| *g *= -scale);
    let d_out = actor_output_grad(&out, &eps, &d_obj_da, entropy_coeff, scale);
    let grads = head.network().backward_params(tape, &d_out)?;
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("actor gradient"));
    }
    optim.step(head.network_mut().params_mut(), &grads)?;
    Ok(objective)
}
