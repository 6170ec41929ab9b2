//! Loss values with their parameter gradients, one function per trainer
//! objective. Each call builds and sweeps its own tape.

use ndarray::Array2;

use crate::nn::{DiscriminatorNet, DuelingNet, GeneratorNet, ParamSet, QNet, Tape};

fn column(values: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((values.len(), 1), values.to_vec()).expect("column")
}

/// `mean D(fake) − mean D(real) + λ·mean((|∂D/∂x̂| − 1)²)` over scalar particles.
pub fn critic_loss(
    disc: &DiscriminatorNet,
    d: &ParamSet,
    fake: &[f64],
    real: &[f64],
    x_hat: &[f64],
    lambda: f64,
) -> (f64, Vec<Array2<f64>>) {
    let mut tape = Tape::new();
    let p = d.bind(&mut tape);
    let xf = tape.leaf(column(fake));
    let xr = tape.leaf(column(real));
    let xh = tape.leaf(column(x_hat));
    let df = disc.forward(&mut tape, &p, xf);
    let df = tape.mean(df);
    let dr = disc.forward(&mut tape, &p, xr);
    let dr = tape.mean(dr);
    let wass = tape.sub(df, dr);
    let gp = disc.gradient_penalty(&mut tape, &p, xh, lambda);
    let loss = tape.add(wass, gp);
    let mut grads = tape.backward(loss);
    (tape.scalar(loss), grads.take_all(&p))
}

/// `−mean D(G^{(a_b)}(s_b, τ_bj))` and its gradient for the generator.
pub fn generator_adversarial_loss(
    net: &GeneratorNet,
    g: &ParamSet,
    disc: &DiscriminatorNet,
    d: &ParamSet,
    states: &Array2<f64>,
    actions: &[usize],
    taus: &Array2<f64>,
) -> (f64, Vec<Array2<f64>>) {
    let n = taus.ncols();
    let mut tape = Tape::new();
    let pg = g.bind(&mut tape);
    let pd = d.bind(&mut tape);
    let all = net.forward(&mut tape, &pg, states, taus);
    let cols: Vec<usize> = actions.iter().flat_map(|&a| std::iter::repeat(a).take(n)).collect();
    let fake = tape.gather(all, cols);
    let score = disc.forward(&mut tape, &pd, fake);
    let m = tape.mean(score);
    let loss = tape.scale(m, -1.0);
    let mut grads = tape.backward(loss);
    (tape.scalar(loss), grads.take_all(&pg))
}

/// `−mean D(G_v(s, τ)) + ½·mean_b (q̂_b − Q_b)²` with
/// `Q_b = mean_j G_v(s_b, τ_bj) + G_ad(s_b)[a_b]`.
#[allow(clippy::too_many_arguments)]
pub fn dueling_generator_loss(
    net: &DuelingNet,
    g: &ParamSet,
    disc: &DiscriminatorNet,
    d: &ParamSet,
    states: &Array2<f64>,
    actions: &[usize],
    taus: &Array2<f64>,
    q_hat: &[f64],
) -> (f64, Vec<Array2<f64>>) {
    let n = taus.ncols();
    let mut tape = Tape::new();
    let pg = g.bind(&mut tape);
    let pd = d.bind(&mut tape);
    let out = net.forward(&mut tape, &pg, states, taus);
    let score = disc.forward(&mut tape, &pd, out.value);
    let adv_term = tape.mean(score);
    let adv_term = tape.scale(adv_term, -1.0);
    let v = tape.mean_groups(out.value, n);
    let a = tape.gather(out.advantage, actions.to_vec());
    let q = tape.add(v, a);
    let target = tape.leaf(column(q_hat));
    let diff = tape.sub(target, q);
    let sq = tape.square(diff);
    let td = tape.mean(sq);
    let td = tape.scale(td, 0.5);
    let loss = tape.add(adv_term, td);
    let mut grads = tape.backward(loss);
    (tape.scalar(loss), grads.take_all(&pg))
}

/// Mean squared TD error `mean_b (y_b − Q(s_b)[a_b])²`.
pub fn dqn_loss(
    net: &QNet,
    q: &ParamSet,
    states: &Array2<f64>,
    actions: &[usize],
    targets: &[f64],
) -> (f64, Vec<Array2<f64>>) {
    let mut tape = Tape::new();
    let p = q.bind(&mut tape);
    let all = net.forward(&mut tape, &p, states);
    let chosen = tape.gather(all, actions.to_vec());
    let y = tape.leaf(column(targets));
    let diff = tape.sub(y, chosen);
    let sq = tape.square(diff);
    let loss = tape.mean(sq);
    let mut grads = tape.backward(loss);
    (tape.scalar(loss), grads.take_all(&p))
}
