use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{DiscriminatorConfig, GeneratorConfig, QNetConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    GanDdqn,
    Dueling,
    Dqn,
    Hard,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::GanDdqn => "gan_ddqn",
            Algo::Dueling => "dueling",
            Algo::Dqn => "dqn",
            Algo::Hard => "hard",
        }
    }
}

/// Three-level reward quantizer: `+eta` at or above `c1`, `-eta` at or
/// below `c2`, zero in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClippingRule {
    pub c1: f64,
    pub c2: f64,
    pub eta: f64,
    #[serde(default = "yes")]
    pub enabled: bool,
}

fn yes() -> bool {
    true
}

impl ClippingRule {
    pub fn new(c1: f64, c2: f64, eta: f64) -> Result<Self> {
        let rule = ClippingRule { c1, c2, eta, enabled: true };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > self.c2) || !(self.eta > 0.0) {
            return Err(Error::config(format!(
                "clipping needs c1 > c2 and eta > 0 (got c1={}, c2={}, eta={})",
                self.c1, self.c2, self.eta
            )));
        }
        Ok(())
    }

    /// Reward fed to the learner: quantized when enabled, raw otherwise.
    pub fn reward(&self, utility: f64) -> f64 {
        if self.enabled {
            clip_reward(utility, self)
        } else {
            utility
        }
    }
}

pub fn clip_reward(utility: f64, rule: &ClippingRule) -> f64 {
    if utility >= rule.c1 {
        rule.eta
    } else if utility <= rule.c2 {
        -rule.eta
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl EpsilonSchedule {
    /// Linear from `start` to `end` over `steps` iterations, then held.
    pub fn at(&self, iteration: usize) -> f64 {
        if self.steps == 0 {
            return self.end;
        }
        let f = (iteration as f64 / self.steps as f64).min(1.0);
        self.start + (self.end - self.start) * f
    }
}

/// Adam moments and gradient-norm cap shared by every learner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub beta1: f64,
    pub beta2: f64,
    pub clip_norm: Option<f64>,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings { beta1: 0.9, beta2: 0.999, clip_norm: Some(10.0) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkSettings {
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    pub qnet: QNetConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub algo: Algo,
    pub gamma: f64,
    pub batch_size: usize,
    /// Iterations between GAN-DDQN training sweeps.
    pub train_every: usize,
    /// Iterations between target-network copies.
    pub target_sync: usize,
    pub n_critic: usize,
    pub lambda_gp: f64,
    pub particles: usize,
    pub buffer: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub epsilon: EpsilonSchedule,
    pub clip: ClippingRule,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub networks: NetworkSettings,
}

impl AgentConfig {
    /// Desk-scale defaults for `algo`. Clipping thresholds sit inside the
    /// utility range of the standard three-slice environment.
    ///
    /// The penalty weight is small on purpose. With a scalar critic input the
    /// two-sided penalty has a stable wrong-sign critic (slope near
    /// `−(1 − gap/2λ)`) whenever the fake/real gap is below `2λ`, and the
    /// generator then walks away from the data. `λ = 0.1` with a faster
    /// critic keeps that basin narrower than the return scale.
    pub fn defaults(algo: Algo) -> Self {
        AgentConfig {
            algo,
            gamma: 0.9,
            batch_size: 32,
            train_every: 50,
            target_sync: 200,
            n_critic: 5,
            lambda_gp: 0.1,
            particles: 32,
            buffer: 2000,
            lr_g: 1e-4,
            lr_d: 1e-3,
            epsilon: EpsilonSchedule { start: 1.0, end: 0.05, steps: 3000 },
            clip: ClippingRule { c1: 1.45, c2: 1.25, eta: 1.0, enabled: true },
            optimizer: OptimizerSettings::default(),
            networks: NetworkSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        // gamma = 0 is allowed for one-step fitting checks
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        if self.batch_size == 0 || self.batch_size > self.buffer {
            return Err(Error::config(format!(
                "batch size {} must be in 1..=buffer ({})",
                self.batch_size, self.buffer
            )));
        }
        if self.n_critic == 0 || self.particles == 0 || self.train_every == 0 || self.target_sync == 0 {
            return Err(Error::config("n_critic, particles, train_every and target_sync must be positive"));
        }
        if !(self.lambda_gp >= 0.0) || !(self.lr_g >= 0.0) || !(self.lr_d >= 0.0) {
            return Err(Error::config("lambda_gp and learning rates must be non-negative"));
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) {
            return Err(Error::config("epsilon bounds must lie in [0, 1]"));
        }
        self.clip.validate()
    }
}
