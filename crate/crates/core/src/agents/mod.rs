//! Allocation policies: GAN-DDQN, its dueling variant, a DQN baseline and
//! the static equal split.

pub mod config;
pub mod fit;
pub mod losses;
pub mod replay;

use ndarray::{Array1, Array2};
use rand::distributions::{Distribution, Open01};
use rand::Rng;

pub use config::{clip_reward, Algo, AgentConfig, ClippingRule, EpsilonSchedule};
pub use replay::{ReplayBuffer, Transition};

use crate::error::{Error, Result};
use crate::nn::{
    clone_params, DiscriminatorNet, DuelingNet, GeneratorNet, Optimizer, OptimizerConfig, OptimizerKind, ParamSet,
    ParticleSet, QNet,
};
use crate::rng::{stream, SimRng, Stream};

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// `r + γ·Ĝ^{(a*)}` where `a*` maximizes the mean of the target particles.
pub fn bellman_target_particles(reward: f64, gamma: f64, target: &ParticleSet) -> Vec<f64> {
    let best = argmax(target.means().as_slice().expect("contiguous"));
    target.values.row(best).iter().map(|z| reward + gamma * z).collect()
}

/// Squared TD error `(r + γ·max_next − q)²`.
pub fn td_error_sq(reward: f64, gamma: f64, max_next: f64, q: f64) -> f64 {
    let z = reward + gamma * max_next - q;
    z * z
}

/// Losses from one training call; absent when that network did not train.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrainStats {
    pub loss_d: Option<f64>,
    pub loss_g: Option<f64>,
}

#[derive(Clone, Debug)]
struct Adversarial<N> {
    net: N,
    g: ParamSet,
    g_target: ParamSet,
    disc: DiscriminatorNet,
    d: ParamSet,
    opt_g: Optimizer,
    opt_d: Optimizer,
}

#[derive(Clone, Debug)]
enum Learner {
    Hard { action: usize },
    GanDdqn(Box<Adversarial<GeneratorNet>>),
    Dueling(Box<Adversarial<DuelingNet>>),
    Dqn { net: QNet, q: ParamSet, q_target: ParamSet, opt: Optimizer },
}

/// One allocation policy with its replay memory and random streams.
#[derive(Clone, Debug)]
pub struct Agent {
    config: AgentConfig,
    n_state: usize,
    n_actions: usize,
    learner: Learner,
    buffer: ReplayBuffer,
    explore_rng: SimRng,
    batch_rng: SimRng,
    tau_rng: SimRng,
    interp_rng: SimRng,
}

fn sample_taus<R: Rng + ?Sized>(rows: usize, n: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_fn((rows, n), |_| Open01.sample(rng))
}

fn optimizer(cfg: &AgentConfig, lr: f64) -> Optimizer {
    let o = cfg.optimizer;
    Optimizer::new(OptimizerConfig {
        lr,
        kind: OptimizerKind::Adam { beta1: o.beta1, beta2: o.beta2, eps: 1e-8 },
        clip_norm: o.clip_norm,
    })
}

impl Agent {
    /// `hard_action` is the index of the equal split, used by the static policy.
    pub fn new(config: AgentConfig, n_state: usize, n_actions: usize, hard_action: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if hard_action >= n_actions {
            return Err(Error::UnknownAction { index: hard_action, len: n_actions });
        }
        let mut init_rng = stream(seed, Stream::Init);
        let nets = &config.networks;
        let learner = match config.algo {
            Algo::Hard => Learner::Hard { action: hard_action },
            Algo::GanDdqn => {
                let net = GeneratorNet::new(n_state, n_actions, &nets.generator)?;
                let disc = DiscriminatorNet::new(0, &nets.discriminator)?;
                let g = net.init(&mut init_rng);
                let d = disc.init(&mut init_rng);
                Learner::GanDdqn(Box::new(Adversarial {
                    g_target: clone_params(&g),
                    net,
                    g,
                    disc,
                    d,
                    opt_g: optimizer(&config, config.lr_g),
                    opt_d: optimizer(&config, config.lr_d),
                }))
            }
            Algo::Dueling => {
                let net = DuelingNet::new(n_state, n_actions, &nets.generator)?;
                let disc = DiscriminatorNet::new(0, &nets.discriminator)?;
                let g = net.init(&mut init_rng);
                let d = disc.init(&mut init_rng);
                Learner::Dueling(Box::new(Adversarial {
                    g_target: clone_params(&g),
                    net,
                    g,
                    disc,
                    d,
                    opt_g: optimizer(&config, config.lr_g),
                    opt_d: optimizer(&config, config.lr_d),
                }))
            }
            Algo::Dqn => {
                let net = QNet::new(n_state, n_actions, &nets.qnet)?;
                let q = net.init(&mut init_rng);
                Learner::Dqn { q_target: clone_params(&q), net, q, opt: optimizer(&config, config.lr_g) }
            }
        };
        Ok(Agent {
            buffer: ReplayBuffer::new(config.buffer)?,
            config,
            n_state,
            n_actions,
            learner,
            explore_rng: stream(seed, Stream::Exploration),
            batch_rng: stream(seed, Stream::Minibatch),
            tau_rng: stream(seed, Stream::Quantiles),
            interp_rng: stream(seed, Stream::Interpolation),
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn algo(&self) -> Algo {
        self.config.algo
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn epsilon(&self, iteration: usize) -> f64 {
        match self.learner {
            Learner::Hard { .. } => 0.0,
            _ => self.config.epsilon.at(iteration),
        }
    }

    /// Q estimate per action for one normalised state. Particle-based
    /// learners average a fresh draw of `N` quantile samples.
    pub fn q_values(&mut self, state: &[f64]) -> Result<Vec<f64>> {
        let n = self.config.particles;
        match &self.learner {
            Learner::Hard { action } => {
                let mut q = vec![0.0; self.n_actions];
                q[*action] = 1.0;
                Ok(q)
            }
            Learner::GanDdqn(a) => {
                let taus: Vec<f64> = (0..n).map(|_| Open01.sample(&mut self.tau_rng)).collect();
                Ok(a.net.particles(&a.g, state, &taus)?.means().to_vec())
            }
            Learner::Dueling(a) => {
                let taus: Vec<f64> = (0..n).map(|_| Open01.sample(&mut self.tau_rng)).collect();
                let (v, adv) = a.net.evaluate(&a.g, state, &taus)?;
                let v_mean = v.iter().sum::<f64>() / v.len() as f64;
                Ok(adv.iter().map(|x| v_mean + x).collect())
            }
            Learner::Dqn { net, q, .. } => net.q_values(q, state),
        }
    }

    /// ε-greedy over [`Agent::q_values`].
    pub fn select_action(&mut self, state: &[f64], epsilon: f64) -> Result<usize> {
        if let Learner::Hard { action } = self.learner {
            return Ok(action);
        }
        if self.explore_rng.gen::<f64>() < epsilon {
            return Ok(self.explore_rng.gen_range(0..self.n_actions));
        }
        Ok(argmax(&self.q_values(state)?))
    }

    pub fn observe(&mut self, t: Transition) -> Result<()> {
        if t.action >= self.n_actions {
            return Err(Error::UnknownAction { index: t.action, len: self.n_actions });
        }
        if t.state.len() != self.n_state || t.next_state.len() != self.n_state {
            return Err(Error::shape("transition state width does not match the agent"));
        }
        self.buffer.push(t);
        Ok(())
    }

    /// Train as the algorithm's schedule dictates after iteration `iteration`
    /// (0-based) has been stored, then sync the target network.
    pub fn after_step(&mut self, iteration: usize) -> Result<TrainStats> {
        let m = self.config.batch_size;
        let stats = match self.config.algo {
            Algo::Hard => TrainStats::default(),
            Algo::GanDdqn if self.buffer.is_full() && (iteration + 1) % self.config.train_every == 0 => {
                self.train_gan_ddqn()?
            }
            Algo::Dueling if self.buffer.len() >= m => self.train_dueling()?,
            Algo::Dqn if self.buffer.len() >= m => self.train_dqn()?,
            _ => TrainStats::default(),
        };
        self.target_sync(iteration + 1);
        Ok(stats)
    }

    /// Copy the online network into the target when `iteration % C == 0`.
    pub fn target_sync(&mut self, iteration: usize) {
        if iteration % self.config.target_sync != 0 {
            return;
        }
        match &mut self.learner {
            Learner::Hard { .. } => {}
            Learner::GanDdqn(a) => a.g_target = clone_params(&a.g),
            Learner::Dueling(a) => a.g_target = clone_params(&a.g),
            Learner::Dqn { q, q_target, .. } => *q_target = clone_params(q),
        }
    }

    fn batch(&self, idx: &[usize]) -> (Array2<f64>, Vec<usize>, Vec<f64>, Array2<f64>) {
        let s = self.n_state;
        let mut states = Array2::zeros((idx.len(), s));
        let mut next = Array2::zeros((idx.len(), s));
        let mut actions = Vec::with_capacity(idx.len());
        let mut rewards = Vec::with_capacity(idx.len());
        for (row, &i) in idx.iter().enumerate() {
            let t = self.buffer.get(i);
            states.row_mut(row).assign(&Array1::from(t.state.clone()));
            next.row_mut(row).assign(&Array1::from(t.next_state.clone()));
            actions.push(t.action);
            rewards.push(t.reward);
        }
        (states, actions, rewards, next)
    }

    /// Per-transition interpolation weights broadcast over particles.
    fn interpolate(&mut self, real: &[f64], fake: &[f64], n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(real.len());
        for (r, f) in real.chunks(n).zip(fake.chunks(n)) {
            let e: f64 = self.interp_rng.gen();
            out.extend(r.iter().zip(f).map(|(y, g)| e * y + (1.0 - e) * g));
        }
        out
    }

    /// One sweep over the whole buffer in shuffled minibatches: a critic step
    /// then a generator step per minibatch. Returns epoch-mean losses.
    pub fn train_gan_ddqn(&mut self) -> Result<TrainStats> {
        if !matches!(self.learner, Learner::GanDdqn(_)) {
            return Err(Error::config("train_gan_ddqn on a different algorithm"));
        }
        if !self.buffer.is_full() {
            return Err(Error::InsufficientData { have: self.buffer.len(), need: self.buffer.capacity() });
        }
        let (n, gamma, lambda) = (self.config.particles, self.config.gamma, self.config.lambda_gp);
        let batches = self.buffer.epoch_batches(self.config.batch_size, &mut self.batch_rng);
        let (mut sum_d, mut sum_g) = (0.0, 0.0);
        for idx in &batches {
            let (states, actions, rewards, next) = self.batch(idx);
            let b = idx.len();
            let taus = sample_taus(b, n, &mut self.tau_rng);
            let next_taus = sample_taus(b, n, &mut self.tau_rng);
            let Learner::GanDdqn(a) = &self.learner else { unreachable!() };
            let target_all = a.net.particles_batch(&a.g_target, &next, &next_taus)?;
            let online_all = a.net.particles_batch(&a.g, &states, &taus)?;
            let mut real = Vec::with_capacity(b * n);
            let mut fake = Vec::with_capacity(b * n);
            for k in 0..b {
                let rows = target_all.slice(ndarray::s![k * n..(k + 1) * n, ..]);
                let set = ParticleSet { values: rows.t().to_owned(), taus: next_taus.row(k).to_vec() };
                real.extend(bellman_target_particles(rewards[k], gamma, &set));
                fake.extend((0..n).map(|j| online_all[[k * n + j, actions[k]]]));
            }
            let x_hat = self.interpolate(&real, &fake, n);
            let Learner::GanDdqn(a) = &mut self.learner else { unreachable!() };
            let (ld, gd) = losses::critic_loss(&a.disc, &a.d, &fake, &real, &x_hat, lambda);
            a.opt_d.step(&mut a.d, &gd)?;
            let (lg, gg) = losses::generator_adversarial_loss(&a.net, &a.g, &a.disc, &a.d, &states, &actions, &taus);
            a.opt_g.step(&mut a.g, &gg)?;
            check_finite(ld, lg)?;
            sum_d += ld;
            sum_g += lg;
        }
        let k = batches.len() as f64;
        Ok(TrainStats { loss_d: Some(sum_d / k), loss_g: Some(sum_g / k) })
    }

    /// `n_critic` critic steps on fresh minibatches, then one generator step
    /// on the adversarial term plus the TD term of the dueling estimate.
    pub fn train_dueling(&mut self) -> Result<TrainStats> {
        if !matches!(self.learner, Learner::Dueling(_)) {
            return Err(Error::config("train_dueling on a different algorithm"));
        }
        let (m, n) = (self.config.batch_size, self.config.particles);
        let (gamma, lambda) = (self.config.gamma, self.config.lambda_gp);
        if self.buffer.len() < m {
            return Err(Error::InsufficientData { have: self.buffer.len(), need: m });
        }
        let mut sum_d = 0.0;
        for _ in 0..self.config.n_critic {
            let idx = self.buffer.sample(m, &mut self.batch_rng)?;
            let (states, _, rewards, next) = self.batch(&idx);
            let taus = sample_taus(m, n, &mut self.tau_rng);
            let next_taus = sample_taus(m, n, &mut self.tau_rng);
            let Learner::Dueling(a) = &self.learner else { unreachable!() };
            let (v_next, _) = a.net.evaluate_batch(&a.g_target, &next, &next_taus)?;
            let (v, _) = a.net.evaluate_batch(&a.g, &states, &taus)?;
            let real: Vec<f64> = v_next.iter().enumerate().map(|(i, z)| rewards[i / n] + gamma * z).collect();
            let fake = v.to_vec();
            let x_hat = self.interpolate(&real, &fake, n);
            let Learner::Dueling(a) = &mut self.learner else { unreachable!() };
            let (ld, gd) = losses::critic_loss(&a.disc, &a.d, &fake, &real, &x_hat, lambda);
            a.opt_d.step(&mut a.d, &gd)?;
            check_finite(ld, 0.0)?;
            sum_d += ld;
        }

        let idx = self.buffer.sample(m, &mut self.batch_rng)?;
        let (states, actions, rewards, next) = self.batch(&idx);
        let taus = sample_taus(m, n, &mut self.tau_rng);
        let next_taus = sample_taus(m, n, &mut self.tau_rng);
        let Learner::Dueling(a) = &mut self.learner else { unreachable!() };
        let (v_next, _) = a.net.evaluate_batch(&a.g_target, &next, &next_taus)?;
        let (_, adv_next) = a.net.evaluate_batch(&a.g, &next, &next_taus)?;
        let q_hat: Vec<f64> = (0..m)
            .map(|b| {
                let v_mean = v_next.slice(ndarray::s![b * n..(b + 1) * n]).mean().expect("n ≥ 1");
                let adv_max = adv_next.row(b).iter().copied().fold(f64::NEG_INFINITY, f64::max);
                rewards[b] + gamma * v_mean + gamma * adv_max
            })
            .collect();
        let (lg, gg) =
            losses::dueling_generator_loss(&a.net, &a.g, &a.disc, &a.d, &states, &actions, &taus, &q_hat);
        a.opt_g.step(&mut a.g, &gg)?;
        check_finite(sum_d, lg)?;
        Ok(TrainStats { loss_d: Some(sum_d / self.config.n_critic as f64), loss_g: Some(lg) })
    }

    /// One step on the mean squared TD error against the target network.
    pub fn train_dqn(&mut self) -> Result<TrainStats> {
        let m = self.config.batch_size;
        let gamma = self.config.gamma;
        if !matches!(self.learner, Learner::Dqn { .. }) {
            return Err(Error::config("train_dqn on a different algorithm"));
        }
        if self.buffer.len() < m {
            return Err(Error::InsufficientData { have: self.buffer.len(), need: m });
        }
        let idx = self.buffer.sample(m, &mut self.batch_rng)?;
        let (states, actions, rewards, next) = self.batch(&idx);
        let Learner::Dqn { net, q, q_target, opt } = &mut self.learner else { unreachable!() };
        let q_next = net.q_values_batch(q_target, &next)?;
        let targets: Vec<f64> = q_next
            .outer_iter()
            .zip(&rewards)
            .map(|(row, r)| r + gamma * row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let (loss, grads) = losses::dqn_loss(net, q, &states, &actions, &targets);
        opt.step(q, &grads)?;
        check_finite(0.0, loss)?;
        Ok(TrainStats { loss_d: None, loss_g: Some(loss) })
    }

    /// Every trainable tensor, prefixed `g.`/`gt.`/`d.`/`q.`/`qt.`.
    pub fn params(&self) -> ParamSet {
        let mut out = ParamSet::default();
        let mut add = |prefix: &str, p: &ParamSet| {
            for (name, t) in &p.tensors {
                out.tensors.push((format!("{prefix}.{name}"), t.clone()));
            }
            out.version = out.version.max(p.version);
        };
        match &self.learner {
            Learner::Hard { .. } => {}
            Learner::GanDdqn(a) => {
                add("g", &a.g);
                add("gt", &a.g_target);
                add("d", &a.d);
            }
            Learner::Dueling(a) => {
                add("g", &a.g);
                add("gt", &a.g_target);
                add("d", &a.d);
            }
            Learner::Dqn { q, q_target, .. } => {
                add("q", q);
                add("qt", q_target);
            }
        }
        out
    }

    /// Inverse of [`Agent::params`]; shapes must match this agent.
    pub fn load_params(&mut self, all: &ParamSet) -> Result<()> {
        let split = |prefix: &str, like: &ParamSet| -> Result<ParamSet> {
            let tag = format!("{prefix}.");
            let tensors: Vec<(String, Array2<f64>)> = all
                .tensors
                .iter()
                .filter_map(|(n, t)| n.strip_prefix(&tag).map(|s| (s.to_string(), t.clone())))
                .collect();
            let p = ParamSet { tensors, version: all.version };
            like.check_compatible(&p).map_err(|e| Error::Checkpoint(format!("{prefix}: {e}")))?;
            Ok(p)
        };
        match &mut self.learner {
            Learner::Hard { .. } => {
                if !all.is_empty() {
                    return Err(Error::Checkpoint("static policy has no parameters".into()));
                }
            }
            Learner::GanDdqn(a) => {
                (a.g, a.g_target, a.d) = (split("g", &a.g)?, split("gt", &a.g_target)?, split("d", &a.d)?);
            }
            Learner::Dueling(a) => {
                (a.g, a.g_target, a.d) = (split("g", &a.g)?, split("gt", &a.g_target)?, split("d", &a.d)?);
            }
            Learner::Dqn { q, q_target, .. } => {
                (*q, *q_target) = (split("q", q)?, split("qt", q_target)?);
            }
        }
        Ok(())
    }

    /// Q estimate of the target network, for sync checks.
    pub fn target_q_values(&mut self, state: &[f64], taus: &[f64]) -> Result<Vec<f64>> {
        match &self.learner {
            Learner::Hard { .. } => self.q_values(state),
            Learner::GanDdqn(a) => Ok(a.net.particles(&a.g_target, state, taus)?.means().to_vec()),
            Learner::Dueling(a) => {
                let (v, adv) = a.net.evaluate(&a.g_target, state, taus)?;
                let v_mean = v.iter().sum::<f64>() / v.len() as f64;
                Ok(adv.iter().map(|x| v_mean + x).collect())
            }
            Learner::Dqn { net, q_target, .. } => net.q_values(q_target, state),
        }
    }

    /// Online Q estimate at fixed quantile samples.
    pub fn online_q_values(&mut self, state: &[f64], taus: &[f64]) -> Result<Vec<f64>> {
        match &self.learner {
            Learner::Hard { .. } => self.q_values(state),
            Learner::GanDdqn(a) => Ok(a.net.particles(&a.g, state, taus)?.means().to_vec()),
            Learner::Dueling(a) => {
                let (v, adv) = a.net.evaluate(&a.g, state, taus)?;
                let v_mean = v.iter().sum::<f64>() / v.len() as f64;
                Ok(adv.iter().map(|x| v_mean + x).collect())
            }
            Learner::Dqn { net, q, .. } => net.q_values(q, state),
        }
    }

    /// Online particles `|A| × N` (GAN-DDQN) or state-value particles `1 × N`
    /// (dueling) at fixed quantile samples.
    pub fn particles(&self, state: &[f64], taus: &[f64]) -> Result<ParticleSet> {
        match &self.learner {
            Learner::GanDdqn(a) => a.net.particles(&a.g, state, taus),
            Learner::Dueling(a) => {
                let (v, _) = a.net.evaluate(&a.g, state, taus)?;
                Ok(ParticleSet { values: Array2::from_shape_vec((1, v.len()), v).expect("row"), taus: taus.to_vec() })
            }
            _ => Err(Error::config("only particle-based agents expose particles")),
        }
    }

    /// Replace the discriminator parameters (e.g. to freeze it at zero).
    pub fn set_discriminator(&mut self, d: ParamSet) -> Result<()> {
        let slot = match &mut self.learner {
            Learner::GanDdqn(a) => &mut a.d,
            Learner::Dueling(a) => &mut a.d,
            _ => return Err(Error::config("agent has no discriminator")),
        };
        slot.check_compatible(&d)?;
        *slot = d;
        Ok(())
    }

    pub fn discriminator(&self) -> Option<&ParamSet> {
        match &self.learner {
            Learner::GanDdqn(a) => Some(&a.d),
            Learner::Dueling(a) => Some(&a.d),
            _ => None,
        }
    }
}

fn check_finite(a: f64, b: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence(format!("non-finite loss ({a}, {b})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 1.0]), 0);
        assert_eq!(argmax(&[0.0, 5.0, 5.0]), 1);
    }

    #[test]
    fn bellman_targets() {
        let set = ParticleSet { values: array![[0.0, 1.0], [0.0, 2.0]], taus: vec![0.3, 0.6] };
        assert_eq!(bellman_target_particles(1.0, 0.9, &set), vec![1.0, 2.8]);
        assert_eq!(bellman_target_particles(1.5, 0.0, &set), vec![1.5, 1.5]);
    }

    #[test]
    fn td_error_cases() {
        assert_eq!(td_error_sq(1.0, 0.5, 2.0, 2.0), 0.0);
        assert_eq!(td_error_sq(1.0, 0.5, 2.0, 0.0), 4.0);
    }

    #[test]
    fn hard_agent_is_static() {
        let mut a = Agent::new(AgentConfig::defaults(Algo::Hard), 3, 36, 27, 1).unwrap();
        for _ in 0..10 {
            assert_eq!(a.select_action(&[0.5, 0.5, 0.5], 1.0).unwrap(), 27);
        }
        assert_eq!(a.after_step(0).unwrap(), TrainStats::default());
        assert!(a.params().is_empty());
    }

    #[test]
    fn training_preconditions() {
        let mut a = Agent::new(AgentConfig::defaults(Algo::GanDdqn), 3, 4, 0, 1).unwrap();
        assert!(matches!(a.train_gan_ddqn(), Err(Error::InsufficientData { .. })));
        assert!(a.train_dqn().is_err());
        let mut d = Agent::new(AgentConfig::defaults(Algo::Dueling), 3, 4, 0, 1).unwrap();
        assert!(matches!(d.train_dueling(), Err(Error::InsufficientData { .. })));
        let bad = Transition { state: vec![0.0; 2], action: 0, reward: 0.0, next_state: vec![0.0; 3] };
        assert!(d.observe(bad).is_err());
    }
}
