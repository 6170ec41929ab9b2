//! Fitting the generator to a fixed one-dimensional distribution with the
//! same critic and generator losses the trainers use. A stationary target
//! isolates the adversarial fit from bootstrapping.

use ndarray::Array2;
use rand::distributions::{Distribution, Open01};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::losses;
use crate::error::{Error, Result};
use crate::nn::{
    DiscriminatorConfig, DiscriminatorNet, GeneratorConfig, GeneratorNet, Optimizer, OptimizerConfig,
    OptimizerKind,
};
use crate::rng::{stream, SimRng, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Generator steps; each follows `n_critic` critic steps.
    pub updates: usize,
    pub n_critic: usize,
    pub batch_size: usize,
    pub particles: usize,
    pub lambda_gp: f64,
    pub lr_g: f64,
    pub lr_d: f64,
    /// Adam moment decays for both networks.
    pub beta1: f64,
    pub beta2: f64,
    /// Draws of each side used for the final distance.
    pub eval_samples: usize,
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
}

impl FitConfig {
    pub fn new(updates: usize, seed: u64) -> Self {
        FitConfig {
            updates,
            n_critic: 5,
            batch_size: 16,
            particles: 16,
            lambda_gp: 0.1,
            lr_g: 1e-4,
            lr_d: 1e-3,
            beta1: 0.5,
            beta2: 0.9,
            eval_samples: 4000,
            seed,
            generator: GeneratorConfig::default(),
            discriminator: DiscriminatorConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    /// Empirical 1-Wasserstein distance between generated and target draws.
    pub w1: f64,
    pub generated: Vec<f64>,
    pub target: Vec<f64>,
    pub loss_d: f64,
    pub loss_g: f64,
}

/// Empirical 1-Wasserstein distance between two equally sized samples:
/// the mean gap between matched order statistics.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::shape(format!("need two equal non-empty samples, got {} and {}", a.len(), b.len())));
    }
    let sorted = |x: &[f64]| {
        let mut v = x.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let (a, b) = (sorted(a), sorted(b));
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

fn taus(rows: usize, n: usize, rng: &mut SimRng) -> Array2<f64> {
    Array2::from_shape_fn((rows, n), |_| Open01.sample(rng))
}

/// Train a one-action generator on a constant state against draws from
/// `sample`, then measure how far its particles are from fresh draws.
pub fn fit_stationary<F>(cfg: &FitConfig, mut sample: F) -> Result<FitReport>
where
    F: FnMut(&mut SimRng) -> f64,
{
    if cfg.updates == 0 || cfg.n_critic == 0 || cfg.batch_size == 0 || cfg.particles == 0 || cfg.eval_samples == 0 {
        return Err(Error::config("fit needs at least one update, row, particle and evaluation draw"));
    }
    let net = GeneratorNet::new(1, 1, &cfg.generator)?;
    let disc = DiscriminatorNet::new(0, &cfg.discriminator)?;
    let mut init = stream(cfg.seed, Stream::Init);
    let mut g = net.init(&mut init);
    let mut d = disc.init(&mut init);
    let adam = |lr| {
        let kind = OptimizerKind::Adam { beta1: cfg.beta1, beta2: cfg.beta2, eps: 1e-8 };
        Optimizer::new(OptimizerConfig { lr, kind, ..OptimizerConfig::adam(lr) })
    };
    let (mut opt_g, mut opt_d) = (adam(cfg.lr_g), adam(cfg.lr_d));
    let mut data_rng = stream(cfg.seed, Stream::Minibatch);
    let mut tau_rng = stream(cfg.seed, Stream::Quantiles);
    let mut interp_rng = stream(cfg.seed, Stream::Interpolation);

    let (b, n) = (cfg.batch_size, cfg.particles);
    let states = Array2::ones((b, 1));
    let actions = vec![0; b];
    let (mut loss_d, mut loss_g) = (0.0, 0.0);
    for _ in 0..cfg.updates {
        let mut ld = 0.0;
        for _ in 0..cfg.n_critic {
            let t = taus(b, n, &mut tau_rng);
            let fake: Vec<f64> = net.particles_batch(&g, &states, &t)?.iter().copied().collect();
            let real: Vec<f64> = (0..b * n).map(|_| sample(&mut data_rng)).collect();
            let x_hat: Vec<f64> = real
                .chunks(n)
                .zip(fake.chunks(n))
                .flat_map(|(r, f)| {
                    let e: f64 = interp_rng.gen();
                    r.iter().zip(f).map(move |(y, x)| e * y + (1.0 - e) * x).collect::<Vec<_>>()
                })
                .collect();
            let (l, gd) = losses::critic_loss(&disc, &d, &fake, &real, &x_hat, cfg.lambda_gp);
            opt_d.step(&mut d, &gd)?;
            ld = l;
        }
        let t = taus(b, n, &mut tau_rng);
        let (lg, gg) = losses::generator_adversarial_loss(&net, &g, &disc, &d, &states, &actions, &t);
        opt_g.step(&mut g, &gg)?;
        if !ld.is_finite() || !lg.is_finite() {
            return Err(Error::Divergence(format!("fit loss became non-finite (critic {ld}, generator {lg})")));
        }
        (loss_d, loss_g) = (ld, lg);
    }

    let m = cfg.eval_samples;
    let eval_taus: Vec<f64> = (0..m).map(|_| Open01.sample(&mut tau_rng)).collect();
    let generated = net.particles(&g, &[1.0], &eval_taus)?.values.row(0).to_vec();
    let target: Vec<f64> = (0..m).map(|_| sample(&mut data_rng)).collect();
    Ok(FitReport { w1: wasserstein1(&generated, &target)?, generated, target, loss_d, loss_g })
}
