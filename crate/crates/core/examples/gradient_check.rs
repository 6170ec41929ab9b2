//! Finite-difference checks of every trainer loss on narrow networks.
//!
//! ```bash
//! cargo run --release -p netslice --example gradient_check
//! ```

use ndarray::Array2;
use netslice::agents::losses::{critic_loss, dqn_loss, dueling_generator_loss, generator_adversarial_loss};
use netslice::nn::{
    check_gradients, DiscriminatorConfig, DiscriminatorNet, DuelingNet, GeneratorConfig, GeneratorNet, QNet,
    QNetConfig,
};
use netslice::rng::{stream, Stream};
use rand::Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = stream(11, Stream::Init);
    let gen_cfg = GeneratorConfig { embed_width: 8, hidden: vec![16, 8], ..GeneratorConfig::default() };
    let disc = DiscriminatorNet::new(0, &DiscriminatorConfig { hidden: vec![16, 8], ..Default::default() })?;
    let d = disc.init(&mut rng);

    let (b, n, a) = (3, 4, 5);
    let states = Array2::from_shape_fn((b, 3), |_| rng.gen_range(0.0..1.0));
    let taus = Array2::from_shape_fn((b, n), |_| rng.gen_range(0.05..0.95));
    let actions = [0, 3, 4];
    let fake: Vec<f64> = (0..b * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let real: Vec<f64> = (0..b * n).map(|_| rng.gen_range(0.0..2.0)).collect();
    let x_hat: Vec<f64> = fake.iter().zip(&real).map(|(f, r)| 0.3 * f + 0.7 * r).collect();

    let (_, grads) = critic_loss(&disc, &d, &fake, &real, &x_hat, 10.0);
    let r = check_gradients("d.", &d, &grads, |p| critic_loss(&disc, p, &fake, &real, &x_hat, 10.0).0);
    println!("critic            {:.3e}", r.max_rel_error);

    let gen = GeneratorNet::new(3, a, &gen_cfg)?;
    let g = gen.init(&mut rng);
    let (_, grads) = generator_adversarial_loss(&gen, &g, &disc, &d, &states, &actions, &taus);
    let r = check_gradients("g.", &g, &grads, |p| {
        generator_adversarial_loss(&gen, p, &disc, &d, &states, &actions, &taus).0
    });
    println!("generator         {:.3e}", r.max_rel_error);

    let duel = DuelingNet::new(3, a, &gen_cfg)?;
    let g = duel.init(&mut rng);
    let q_hat = [1.5, -0.2, 0.8];
    let (_, grads) = dueling_generator_loss(&duel, &g, &disc, &d, &states, &actions, &taus, &q_hat);
    let r = check_gradients("g.", &g, &grads, |p| {
        dueling_generator_loss(&duel, p, &disc, &d, &states, &actions, &taus, &q_hat).0
    });
    println!("dueling generator {:.3e}", r.max_rel_error);

    let qnet = QNet::new(3, a, &QNetConfig { hidden: vec![16, 8], ..QNetConfig::default() })?;
    let q = qnet.init(&mut rng);
    let targets = [0.5, 1.0, -1.0];
    let (_, grads) = dqn_loss(&qnet, &q, &states, &actions, &targets);
    let r = check_gradients("q.", &q, &grads, |p| dqn_loss(&qnet, p, &states, &actions, &targets).0);
    println!("dqn               {:.3e}", r.max_rel_error);
    Ok(())
}
