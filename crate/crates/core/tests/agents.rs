//! Agent behaviour on hand-built buffers and tiny MDPs.

use ndarray::Array2;

use netslice::agents::losses::{dqn_loss, dueling_generator_loss, generator_adversarial_loss};
use netslice::agents::{td_error_sq, Agent, AgentConfig, Algo, Transition};
use netslice::env::near_equal_split;
use netslice::nn::{
    check_gradients, Activation, DiscriminatorNet, DuelingNet, GeneratorConfig, GeneratorNet, Init, MlpSpec,
    Optimizer, OptimizerConfig, ParamSet, QNet, QNetConfig,
};
use netslice::rng::{stream, Stream};

fn identity_disc() -> (DiscriminatorNet, ParamSet) {
    let net = DiscriminatorNet::from_spec(MlpSpec::new(vec![1, 1], Activation::Identity, Init::UniformFanIn).unwrap())
        .unwrap();
    let p = ParamSet {
        tensors: vec![("d.0.w".into(), Array2::ones((1, 1))), ("d.0.b".into(), Array2::zeros((1, 1)))],
        version: 0,
    };
    (net, p)
}

fn fill(agent: &mut Agent, n: usize, state: &[f64], action: usize, reward: f64) {
    for _ in 0..n {
        agent
            .observe(Transition { state: state.to_vec(), action, reward, next_state: state.to_vec() })
            .unwrap();
    }
}

#[test]
fn hard_split_rounding() {
    assert_eq!(near_equal_split(9, 3), vec![3, 3, 3]);
    assert_eq!(near_equal_split(10, 3), vec![4, 3, 3]);
    assert_eq!(near_equal_split(50, 3), vec![17, 17, 16]);
}

#[test]
fn td_error_arithmetic() {
    assert_eq!(td_error_sq(1.0, 0.5, 2.0, 2.0), 0.0);
    assert_eq!(td_error_sq(1.0, 0.5, 2.0, 0.0), 4.0);
}

#[test]
fn uniform_exploration_at_full_epsilon() {
    let mut agent = Agent::new(AgentConfig::defaults(Algo::Dqn), 3, 4, 0, 9).unwrap();
    let draws = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[agent.select_action(&[0.1, 0.2, 0.3], 1.0).unwrap()] += 1;
    }
    let (p, n) = (0.25, draws as f64);
    let sd = (n * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - n * p).abs() < 3.0 * sd, "{counts:?}");
    }
}

#[test]
fn identity_critic_pushes_particles_up() {
    let (disc, d) = identity_disc();
    let net = GeneratorNet::new(3, 2, &GeneratorConfig::default()).unwrap();
    let g = net.init(&mut stream(4, Stream::Init));
    let states = Array2::from_elem((2, 3), 0.5);
    let taus = Array2::from_shape_vec((2, 3), vec![0.1, 0.5, 0.9, 0.2, 0.4, 0.6]).unwrap();
    let (_, grads) = generator_adversarial_loss(&net, &g, &disc, &d, &states, &[0, 1], &taus);
    let mut stepped = g.clone();
    Optimizer::new(OptimizerConfig::sgd(1e-3)).step(&mut stepped, &grads).unwrap();
    let before = net.particles_batch(&g, &states, &taus).unwrap();
    let after = net.particles_batch(&stepped, &states, &taus).unwrap();
    let chosen = |m: &Array2<f64>| (0..6).map(|r| m[[r, r / 3]]).sum::<f64>();
    assert!(chosen(&after) > chosen(&before));
}

#[test]
fn dueling_td_term_alone_is_half_squared_error() {
    // γ = 0, zero advantages and a silent critic leave ½·mean_b (r_b − V̄_b)².
    let net = DuelingNet::new(3, 3, &GeneratorConfig { embed_width: 8, hidden: vec![16, 8], ..Default::default() })
        .unwrap();
    let mut g = net.init(&mut stream(2, Stream::Init));
    for (name, t) in g.tensors.iter_mut() {
        if name.starts_with("adv.") {
            t.fill(0.0);
        }
    }
    let (disc, mut d) = identity_disc();
    d.tensors[0].1.fill(0.0);
    let states = Array2::from_shape_vec((2, 3), vec![0.1, 0.9, 0.4, 0.3, 0.3, 0.8]).unwrap();
    let taus = Array2::from_shape_vec((2, 2), vec![0.25, 0.75, 0.1, 0.6]).unwrap();
    let rewards = [1.0, -0.5];
    let (loss, grads) = dueling_generator_loss(&net, &g, &disc, &d, &states, &[0, 2], &taus, &rewards);
    let (v, adv) = net.evaluate_batch(&g, &states, &taus).unwrap();
    assert!(adv.iter().all(|a| *a == 0.0));
    let expect = (0..2)
        .map(|b| {
            let vbar = (v[2 * b] + v[2 * b + 1]) / 2.0;
            0.5 * (rewards[b] - vbar).powi(2)
        })
        .sum::<f64>()
        / 2.0;
    assert!((loss - expect).abs() < 1e-12);
    let report = check_gradients("g.", &g, &grads, |p| {
        dueling_generator_loss(&net, p, &disc, &d, &states, &[0, 2], &taus, &rewards).0
    });
    assert!(report.passes(1e-4), "{:?}", report.per_param_errors);
}

#[test]
fn dueling_q_is_value_plus_advantage() {
    // V mean 2.0 and advantages [0.5, −0.5] give Q = [2.5, 1.5] and action 0.
    let mut cfg = AgentConfig::defaults(Algo::Dueling);
    cfg.networks.generator = GeneratorConfig { embed_width: 4, hidden: vec![4, 4], ..Default::default() };
    let mut agent = Agent::new(cfg, 3, 2, 0, 1).unwrap();
    let mut p = agent.params();
    for (name, t) in p.tensors.iter_mut() {
        if name.starts_with("g.value.") || name.starts_with("g.adv.") {
            t.fill(0.0);
        }
    }
    let set = |p: &mut ParamSet, name: &str, v: Vec<f64>| {
        let t = p.get_mut(name).unwrap();
        *t = Array2::from_shape_vec(t.raw_dim(), v).unwrap();
    };
    set(&mut p, "g.value.0.b", vec![2.0]);
    set(&mut p, "g.adv.0.b", vec![0.5, -0.5]);
    agent.load_params(&p).unwrap();
    let taus = [0.3, 0.7];
    assert_eq!(agent.online_q_values(&[0.2, 0.4, 0.6], &taus).unwrap(), vec![2.5, 1.5]);
    assert_eq!(agent.select_action(&[0.2, 0.4, 0.6], 0.0).unwrap(), 0);
}

#[test]
fn dueling_runs_n_critic_discriminator_steps_per_call() {
    let mut cfg = AgentConfig::defaults(Algo::Dueling);
    cfg.networks.generator = GeneratorConfig { embed_width: 4, hidden: vec![4, 4], ..Default::default() };
    cfg.particles = 4;
    cfg.batch_size = 4;
    cfg.n_critic = 5;
    let mut agent = Agent::new(cfg, 3, 3, 0, 1).unwrap();
    fill(&mut agent, 4, &[0.1, 0.2, 0.3], 1, 1.0);
    let v0 = agent.discriminator().unwrap().version;
    agent.train_dueling().unwrap();
    assert_eq!(agent.discriminator().unwrap().version, v0 + 5);
    agent.train_dueling().unwrap();
    assert_eq!(agent.discriminator().unwrap().version, v0 + 10);
}

#[test]
fn gan_ddqn_fits_a_constant_return() {
    // Fixed reward 3 and γ = 0: every target particle is 3.
    let mut cfg = AgentConfig::defaults(Algo::GanDdqn);
    cfg.gamma = 0.0;
    cfg.buffer = 32;
    cfg.batch_size = 32;
    cfg.particles = 16;
    let mut agent = Agent::new(cfg, 3, 2, 0, 3).unwrap();
    let state = [0.5, 0.5, 0.5];
    for i in 0..32 {
        agent
            .observe(Transition { state: state.to_vec(), action: i % 2, reward: 3.0, next_state: state.to_vec() })
            .unwrap();
    }
    for _ in 0..2000 {
        agent.train_gan_ddqn().unwrap();
    }
    let taus: Vec<f64> = (1..=64).map(|k| k as f64 / 65.0).collect();
    let particles = agent.particles(&state, &taus).unwrap();
    let err = particles.values.iter().map(|z| (z - 3.0).abs()).sum::<f64>() / particles.values.len() as f64;
    assert!(err < 0.3, "mean |particle − 3| = {err}");
}

#[test]
fn dqn_gradient_and_target_sync() {
    let net = QNet::new(3, 4, &QNetConfig { hidden: vec![16, 8], ..QNetConfig::default() }).unwrap();
    let q = net.init(&mut stream(8, Stream::Init));
    let states = Array2::from_shape_vec((2, 3), vec![0.1, 0.5, 0.9, 0.7, 0.2, 0.4]).unwrap();
    let (_, grads) = dqn_loss(&net, &q, &states, &[3, 0], &[1.0, -2.0]);
    let report = check_gradients("q.", &q, &grads, |p| dqn_loss(&net, p, &states, &[3, 0], &[1.0, -2.0]).0);
    assert!(report.passes(1e-4));

    let mut cfg = AgentConfig::defaults(Algo::Dqn);
    cfg.batch_size = 4;
    cfg.target_sync = 1;
    let mut agent = Agent::new(cfg, 3, 4, 0, 2).unwrap();
    fill(&mut agent, 4, &[0.3, 0.3, 0.3], 2, 1.0);
    agent.train_dqn().unwrap();
    let probe = [0.6, 0.1, 0.2];
    assert_ne!(agent.online_q_values(&probe, &[]).unwrap(), agent.target_q_values(&probe, &[]).unwrap());
    agent.target_sync(7);
    assert_eq!(agent.online_q_values(&probe, &[]).unwrap(), agent.target_q_values(&probe, &[]).unwrap());
}
