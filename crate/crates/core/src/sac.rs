//! Soft actor-critic with twin critics, polyak-averaged targets and a fixed
//! entropy coefficient. One gradient cycle per environment step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::env::{ArmEnv, OBS_DIM};
use crate::error::{Error, Result};
use crate::hybrid::{squashed_sample, ActorNetwork, ArchitectureConfig, CriticNetwork, Parametric, ACTION_DIM};
use crate::nn::{adam_update, AdamState};
use crate::scalar::{ensure_finite, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<T> {
    pub obs: [T; OBS_DIM],
    pub action: [T; ACTION_DIM],
    pub reward: T,
    pub next_obs: [T; OBS_DIM],
    /// No bootstrapping through `next_obs` when set.
    pub done: bool,
}

impl<T: Real> Transition<T> {
    pub fn done_mask(&self) -> T {
        if self.done {
            T::one()
        } else {
            T::zero()
        }
    }
}

/// Fixed-capacity FIFO replay memory.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<Transition<T>>,
    /// Slot the next push overwrites once full.
    head: usize,
}

impl<T: Real> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Configuration("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            items: Vec::new(),
            head: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition<T>) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// `i`-th stored transition, oldest first.
    pub fn get(&self, i: usize) -> Option<&Transition<T>> {
        if i >= self.items.len() {
            return None;
        }
        let start = if self.items.len() < self.capacity { 0 } else { self.head };
        self.items.get((start + i) % self.items.len())
    }

    /// Uniform draws with replacement; needs only a non-empty buffer.
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Transition<T>>> {
        if self.items.is_empty() {
            return Err(Error::NotReady { size: 0, needed: 1 });
        }
        Ok((0..n).map(|_| self.items[rng.gen_range(0..self.items.len())]).collect())
    }

    /// A training batch; not ready until at least `batch_size` items are stored.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<Transition<T>>> {
        if self.items.len() < batch_size {
            return Err(Error::NotReady {
                size: self.items.len(),
                needed: batch_size,
            });
        }
        self.draw(batch_size, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SacHyperparams<T> {
    pub gamma: T,
    pub entropy_alpha: T,
    pub lr: T,
    /// Polyak coefficient: weight kept by the target.
    pub rho: T,
    pub batch_size: usize,
    pub warmup_steps: usize,
    pub max_episodes: usize,
    pub memory_size: usize,
    /// Store done = 0 on step-cap truncation so the target bootstraps.
    pub bootstrap_on_truncation: bool,
}

impl<T: Real> Default for SacHyperparams<T> {
    fn default() -> Self {
        Self {
            gamma: T::lit(0.99),
            entropy_alpha: T::lit(0.2),
            lr: T::lit(3e-4),
            rho: T::lit(0.995),
            batch_size: 64,
            warmup_steps: 1000,
            max_episodes: 5000,
            memory_size: 1_000_000,
            bootstrap_on_truncation: false,
        }
    }
}

impl<T: Real> SacHyperparams<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: T| {
            if v >= T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(Error::Configuration(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("gamma", self.gamma)?;
        unit("rho", self.rho)?;
        if !(self.entropy_alpha >= T::zero()) || !(self.lr > T::zero()) {
            return Err(Error::Configuration("alpha must be ≥ 0 and lr > 0".into()));
        }
        if self.batch_size == 0 || self.memory_size == 0 {
            return Err(Error::Configuration("batch_size and memory_size must be positive".into()));
        }
        Ok(())
    }
}

/// `target ← rho·target + (1 − rho)·online`, elementwise.
pub fn soft_update<T: Real>(target: &mut [T], online: &[T], rho: T) -> Result<()> {
    if target.len() != online.len() {
        return Err(Error::dim("soft update", target.len(), online.len()));
    }
    let keep = T::one() - rho;
    for (t, &o) in target.iter_mut().zip(online) {
        *t = rho * *t + keep * o;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats<T> {
    pub critic_loss: [T; 2],
    pub actor_loss: T,
}

/// Networks, optimizer states and the random stream of one training run.
#[derive(Debug, Clone)]
pub struct SacAgent<T> {
    pub hyper: SacHyperparams<T>,
    pub max_torque: T,
    actor: ActorNetwork<T>,
    critics: [CriticNetwork<T>; 2],
    targets: [CriticNetwork<T>; 2],
    actor_opt: AdamState<T>,
    critic_opt: [AdamState<T>; 2],
    rng: ChaCha8Rng,
}

fn normal_pair<T: Real, R: Rng + ?Sized>(rng: &mut R) -> [T; ACTION_DIM] {
    [T::lit(rng.sample(StandardNormal)), T::lit(rng.sample(StandardNormal))]
}

impl<T: Real> SacAgent<T> {
    pub fn new(
        actor_arch: ArchitectureConfig,
        critic_arch: ArchitectureConfig,
        hyper: SacHyperparams<T>,
        max_torque: T,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = ActorNetwork::new(actor_arch, &mut rng)?;
        let c1 = CriticNetwork::new(critic_arch.clone(), max_torque, &mut rng)?;
        let c2 = CriticNetwork::new(critic_arch, max_torque, &mut rng)?;
        Self::from_networks(actor, [c1, c2], hyper, max_torque, rng)
    }

    /// Targets start as copies of the critics.
    pub fn from_networks(
        actor: ActorNetwork<T>,
        critics: [CriticNetwork<T>; 2],
        hyper: SacHyperparams<T>,
        max_torque: T,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        hyper.validate()?;
        if !(max_torque > T::zero()) {
            return Err(Error::Configuration("max_torque must be positive".into()));
        }
        if critics[0].n_params() != critics[1].n_params() {
            return Err(Error::Configuration("twin critics must share one architecture".into()));
        }
        Ok(Self {
            hyper,
            max_torque,
            actor_opt: AdamState::new(actor.n_params()),
            critic_opt: [AdamState::new(critics[0].n_params()), AdamState::new(critics[1].n_params())],
            targets: critics.clone(),
            actor,
            critics,
            rng,
        })
    }

    pub fn actor(&self) -> &ActorNetwork<T> {
        &self.actor
    }

    pub fn critics(&self) -> &[CriticNetwork<T>; 2] {
        &self.critics
    }

    pub fn target_critics(&self) -> &[CriticNetwork<T>; 2] {
        &self.targets
    }

    /// Replaces all networks (targets included); optimizer moments are reset.
    pub fn load_networks(
        &mut self,
        actor: ActorNetwork<T>,
        critics: [CriticNetwork<T>; 2],
        targets: [CriticNetwork<T>; 2],
    ) -> Result<()> {
        let same = |a: &CriticNetwork<T>, b: &CriticNetwork<T>| a.n_params() == b.n_params();
        if actor.n_params() != self.actor.n_params()
            || !same(&critics[0], &self.critics[0])
            || !same(&critics[1], &self.critics[1])
            || !same(&targets[0], &self.critics[0])
            || !same(&targets[1], &self.critics[0])
        {
            return Err(Error::Configuration("loaded networks do not match the agent's architecture".into()));
        }
        self.actor_opt = AdamState::new(actor.n_params());
        self.critic_opt = [AdamState::new(critics[0].n_params()), AdamState::new(critics[1].n_params())];
        self.actor = actor;
        self.critics = critics;
        self.targets = targets;
        Ok(())
    }

    pub fn random_action(&mut self) -> [T; ACTION_DIM] {
        let m = self.max_torque.as_f64();
        [T::lit(self.rng.gen_range(-m..m)), T::lit(self.rng.gen_range(-m..m))]
    }

    /// Stochastic policy action.
    pub fn act(&mut self, obs: &[T; OBS_DIM]) -> Result<[T; ACTION_DIM]> {
        let noise = normal_pair(&mut self.rng);
        let (mean, log_std, _) = self.actor.forward(obs)?;
        let s = squashed_sample(&mean, &log_std, &noise, self.max_torque)?;
        Ok([s.action[0], s.action[1]])
    }

    /// `max_torque·tanh(mean)`.
    pub fn act_deterministic(&self, obs: &[T; OBS_DIM]) -> Result<[T; ACTION_DIM]> {
        let (mean, _, _) = self.actor.forward(obs)?;
        Ok([self.max_torque * mean[0].tanh(), self.max_torque * mean[1].tanh()])
    }

    pub fn draw_noise(&mut self, n: usize) -> Vec<[T; ACTION_DIM]> {
        (0..n).map(|_| normal_pair(&mut self.rng)).collect()
    }

    /// Bootstrapped regression targets with a fresh next action per sample.
    pub fn compute_targets(&mut self, batch: &[Transition<T>]) -> Result<Vec<T>> {
        let noise = self.draw_noise(batch.len());
        self.compute_targets_with_noise(batch, &noise)
    }

    /// `r + γ(1 − d)(min_i Q_targ,i(s′, a′) − α log π(a′|s′))` with `a′` from `noise`.
    pub fn compute_targets_with_noise(&self, batch: &[Transition<T>], noise: &[[T; ACTION_DIM]]) -> Result<Vec<T>> {
        if noise.len() != batch.len() {
            return Err(Error::dim("target noise", batch.len(), noise.len()));
        }
        let h = &self.hyper;
        let mut y = Vec::with_capacity(batch.len());
        for (t, eps) in batch.iter().zip(noise) {
            if t.done || h.gamma == T::zero() {
                y.push(t.reward);
                continue;
            }
            let (mean, log_std, _) = self.actor.forward(&t.next_obs)?;
            let s = squashed_sample(&mean, &log_std, eps, self.max_torque)?;
            let q1 = self.targets[0].forward(&t.next_obs, &s.action)?.0;
            let q2 = self.targets[1].forward(&t.next_obs, &s.action)?.0;
            let soft = q1.min(q2) - h.entropy_alpha * s.log_prob;
            y.push(t.reward + h.gamma * (T::one() - t.done_mask()) * soft);
        }
        ensure_finite(&y, "critic targets")?;
        Ok(y)
    }

    /// Batch-mean squared error of critic `i` and its gradient.
    pub fn critic_loss_gradient(&self, i: usize, batch: &[Transition<T>], y: &[T]) -> Result<(T, Vec<T>)> {
        if y.len() != batch.len() || batch.is_empty() {
            return Err(Error::dim("critic targets", batch.len(), y.len()));
        }
        let critic = &self.critics[i];
        let scale = T::one() / T::from_usize(batch.len()).expect("batch size fits the scalar type");
        let mut grads = vec![T::zero(); critic.n_params()];
        let mut loss = T::zero();
        for (t, &target) in batch.iter().zip(y) {
            let (q, cache) = critic.forward(&t.obs, &t.action)?;
            let err = q - target;
            loss += err * err * scale;
            critic.backward(&cache, T::lit(2.0) * err * scale, &mut grads)?;
        }
        ensure_finite(&[loss], "critic loss")?;
        Ok((loss, grads))
    }

    /// One Adam step per critic against the same targets. Returns the pre-step losses.
    pub fn critic_update(&mut self, batch: &[Transition<T>], y: &[T]) -> Result<[T; 2]> {
        let mut losses = [T::zero(); 2];
        for i in 0..2 {
            let (loss, grads) = self.critic_loss_gradient(i, batch, y)?;
            let mut p = self.critics[i].params();
            adam_update(&mut p, &grads, &mut self.critic_opt[i], self.hyper.lr)?;
            self.critics[i].set_params(&p)?;
            losses[i] = loss;
        }
        Ok(losses)
    }

    /// `mean_B(α log π(ã|s) − min_i Q_i(s, ã))` and its gradient in the actor's
    /// parameters, with `ã` reparameterized through `noise`. Critics are read only.
    pub fn actor_loss_gradient(&self, batch: &[Transition<T>], noise: &[[T; ACTION_DIM]]) -> Result<(T, Vec<T>)> {
        if noise.len() != batch.len() || batch.is_empty() {
            return Err(Error::dim("actor noise", batch.len(), noise.len()));
        }
        let alpha = self.hyper.entropy_alpha;
        let scale = T::one() / T::from_usize(batch.len()).expect("batch size fits the scalar type");
        let mut grads = vec![T::zero(); self.actor.n_params()];
        let mut scratch = vec![T::zero(); self.critics[0].n_params()];
        let mut loss = T::zero();
        for (t, eps) in batch.iter().zip(noise) {
            let (mean, log_std, cache) = self.actor.forward(&t.obs)?;
            let s = squashed_sample(&mean, &log_std, eps, self.max_torque)?;
            let (q1, c1) = self.critics[0].forward(&t.obs, &s.action)?;
            let (q2, c2) = self.critics[1].forward(&t.obs, &s.action)?;
            // Only the smaller critic carries gradient; ties go to the first.
            let (q, critic, cache_q) = if q2 < q1 {
                (q2, &self.critics[1], c2)
            } else {
                (q1, &self.critics[0], c1)
            };
            loss += (alpha * s.log_prob - q) * scale;
            let (_, d_action) = critic.backward(&cache_q, -scale, &mut scratch)?;
            let mut d_mean = [T::zero(); ACTION_DIM];
            let mut d_log_std = [T::zero(); ACTION_DIM];
            for j in 0..ACTION_DIM {
                d_mean[j] = alpha * scale * s.dlogp_dmean[j] + d_action[j] * s.daction_dmean[j];
                d_log_std[j] = alpha * scale * s.dlogp_dlog_std[j] + d_action[j] * s.daction_dlog_std[j];
            }
            self.actor.backward(&cache, &d_mean, &d_log_std, &mut grads)?;
        }
        ensure_finite(&[loss], "actor loss")?;
        Ok((loss, grads))
    }

    pub fn actor_update(&mut self, batch: &[Transition<T>]) -> Result<T> {
        let noise = self.draw_noise(batch.len());
        self.actor_update_with_noise(batch, &noise)
    }

    /// One Adam step descending the actor loss. Returns the pre-step loss.
    pub fn actor_update_with_noise(&mut self, batch: &[Transition<T>], noise: &[[T; ACTION_DIM]]) -> Result<T> {
        let (loss, grads) = self.actor_loss_gradient(batch, noise)?;
        let mut p = self.actor.params();
        adam_update(&mut p, &grads, &mut self.actor_opt, self.hyper.lr)?;
        self.actor.set_params(&p)?;
        Ok(loss)
    }

    pub fn update_targets(&mut self) -> Result<()> {
        for i in 0..2 {
            let mut t = self.targets[i].params();
            soft_update(&mut t, &self.critics[i].params(), self.hyper.rho)?;
            self.targets[i].set_params(&t)?;
        }
        Ok(())
    }

    /// Sample, targets, critic step, actor step, target blend.
    pub fn update(&mut self, buffer: &ReplayBuffer<T>) -> Result<UpdateStats<T>> {
        let batch = buffer.sample(self.hyper.batch_size, &mut self.rng)?;
        let y = self.compute_targets(&batch)?;
        let critic_loss = self.critic_update(&batch, &y)?;
        let actor_loss = self.actor_update(&batch)?;
        self.update_targets()?;
        Ok(UpdateStats { critic_loss, actor_loss })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    /// Zero-based.
    pub episode: usize,
    pub steps: usize,
    pub episode_return: f64,
    pub solved: bool,
    /// Environment steps taken so far in the run, this episode included.
    pub total_steps: usize,
}

/// Runs `episodes` episodes, calling `on_episode` after each. Random torques
/// are used and no update happens until `warmup_steps` steps have been taken.
/// An error from the callback aborts the run.
pub fn train_run<T, F>(
    agent: &mut SacAgent<T>,
    env: &mut ArmEnv<T>,
    buffer: &mut ReplayBuffer<T>,
    episodes: usize,
    mut on_episode: F,
) -> Result<Vec<EpisodeSummary>>
where
    T: Real,
    F: FnMut(&EpisodeSummary, &SacAgent<T>) -> Result<()>,
{
    let mut log = Vec::with_capacity(episodes);
    let mut total_steps = 0usize;
    for episode in 0..episodes {
        let mut obs = env.reset();
        let mut ret = T::zero();
        loop {
            let action = if total_steps < agent.hyper.warmup_steps {
                agent.random_action()
            } else {
                agent.act(&obs)?
            };
            let r = env.step(action)?;
            total_steps += 1;
            ret += r.reward;
            let truncated = r.done && !r.reached;
            buffer.push(Transition {
                obs,
                action,
                reward: r.reward,
                next_obs: r.observation,
                done: r.reached || (truncated && !agent.hyper.bootstrap_on_truncation),
            });
            obs = r.observation;
            if total_steps >= agent.hyper.warmup_steps && buffer.len() >= agent.hyper.batch_size {
                agent.update(buffer)?;
            }
            if r.done {
                let summary = EpisodeSummary {
                    episode,
                    steps: r.steps_used,
                    episode_return: ret.as_f64(),
                    solved: r.reached,
                    total_steps,
                };
                on_episode(&summary, agent)?;
                log.push(summary);
                break;
            }
        }
    }
    Ok(log)
}
