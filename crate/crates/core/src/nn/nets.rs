//! Generator, dueling generator, discriminator and plain Q-network.
//!
//! Batches of `B` states with `N` quantile samples each are laid out as
//! `B·N` rows, transition-major: row `b·N + j` pairs state `b` with `τ_bj`.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{Tape, Var};
use super::params::{Activation, Init, MlpSpec, ParamSet};
use crate::error::{Error, Result};

/// Return samples: one row per action (or a single row of state-value
/// particles) and one column per `τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    pub values: Array2<f64>,
    pub taus: Vec<f64>,
}

impl ParticleSet {
    pub fn n_particles(&self) -> usize {
        self.values.ncols()
    }

    /// Row means, i.e. the Q estimate per action.
    pub fn means(&self) -> Array1<f64> {
        self.values.mean_axis(Axis(1)).expect("at least one particle")
    }
}

fn check_taus(taus: &Array2<f64>) -> Result<()> {
    if taus.iter().all(|t| *t > 0.0 && *t < 1.0) {
        Ok(())
    } else {
        Err(Error::shape("quantile samples must lie in (0, 1)"))
    }
}

fn check_state(states: &Array2<f64>, width: usize) -> Result<()> {
    if states.ncols() != width {
        return Err(Error::shape(format!("state width {} but network expects {width}", states.ncols())));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub embed_width: usize,
    /// Widths after fusion, before the output layer.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub init: Init,
    /// Feed `cos(π·k·τ)` for `k < n` instead of raw `τ` into the sample branch.
    pub cosine_features: Option<usize>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            embed_width: 64,
            hidden: vec![128, 64],
            activation: Activation::default(),
            init: Init::UniformFanIn,
            cosine_features: None,
        }
    }
}

/// State and sample branches shared by both generator variants.
#[derive(Clone, Debug, PartialEq)]
struct Embedding {
    state: MlpSpec,
    tau: MlpSpec,
    cosine_features: Option<usize>,
}

impl Embedding {
    fn new(n_state: usize, cfg: &GeneratorConfig) -> Result<Self> {
        let e = cfg.embed_width;
        let tau_in = cfg.cosine_features.unwrap_or(1);
        Ok(Embedding {
            state: MlpSpec::new(vec![n_state, e, e], cfg.activation, cfg.init)?,
            tau: MlpSpec::new(vec![tau_in, e, e], cfg.activation, cfg.init)?,
            cosine_features: cfg.cosine_features,
        })
    }

    fn n_tensors(&self) -> usize {
        self.state.n_tensors() + self.tau.n_tensors()
    }

    fn init_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut ParamSet) {
        self.state.init_into("state", rng, out);
        self.tau.init_into("tau", rng, out);
    }

    fn tau_input(&self, taus: &Array2<f64>) -> Array2<f64> {
        let flat: Vec<f64> = taus.iter().copied().collect();
        match self.cosine_features {
            None => Array2::from_shape_vec((flat.len(), 1), flat).expect("column"),
            Some(k) => Array2::from_shape_fn((flat.len(), k), |(r, i)| {
                (std::f64::consts::PI * i as f64 * flat[r]).cos()
            }),
        }
    }

    /// Fused `(B·N) × E` embedding.
    fn forward(&self, tape: &mut Tape, p: &[Var], states: &Array2<f64>, taus: &Array2<f64>) -> Var {
        let n = taus.ncols();
        let (ps, pt) = p.split_at(self.state.n_tensors());
        let s = tape.leaf(states.clone());
        let s_emb = self.state.forward(tape, ps, s, false);
        let t = tape.leaf(self.tau_input(taus));
        let t_emb = self.tau.forward(tape, &pt[..self.tau.n_tensors()], t, false);
        hadamard_fuse(tape, s_emb, t_emb, n)
    }
}

/// Repeat each of the `B` state embeddings `n` times and multiply
/// elementwise with the `B·n` sample embeddings.
pub fn hadamard_fuse(tape: &mut Tape, state_emb: Var, sample_emb: Var, n: usize) -> Var {
    let rep = tape.repeat_rows(state_emb, n);
    tape.mul(rep, sample_emb)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorNet {
    embed: Embedding,
    head: MlpSpec,
    n_actions: usize,
}

impl GeneratorNet {
    pub fn new(n_state: usize, n_actions: usize, cfg: &GeneratorConfig) -> Result<Self> {
        let mut widths = vec![cfg.embed_width];
        widths.extend(&cfg.hidden);
        widths.push(n_actions);
        Ok(GeneratorNet {
            embed: Embedding::new(n_state, cfg)?,
            head: MlpSpec::new(widths, cfg.activation, cfg.init)?,
            n_actions,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_state(&self) -> usize {
        self.embed.state.input_width()
    }

    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamSet {
        let mut p = ParamSet::default();
        self.embed.init_into(rng, &mut p);
        self.head.init_into("head", rng, &mut p);
        p
    }

    /// `(B·N) × |A|` particles.
    pub fn forward(&self, tape: &mut Tape, p: &[Var], states: &Array2<f64>, taus: &Array2<f64>) -> Var {
        let k = self.embed.n_tensors();
        let fused = self.embed.forward(tape, &p[..k], states, taus);
        self.head.forward(tape, &p[k..], fused, false)
    }

    /// Particles for a batch of states, `(B·N) × |A|`.
    pub fn particles_batch(&self, params: &ParamSet, states: &Array2<f64>, taus: &Array2<f64>) -> Result<Array2<f64>> {
        check_state(states, self.n_state())?;
        check_taus(taus)?;
        let mut tape = Tape::new();
        let p = params.bind(&mut tape);
        let out = self.forward(&mut tape, &p, states, taus);
        Ok(tape.value(out).clone())
    }

    /// `|A| × N` particles for one state.
    pub fn particles(&self, params: &ParamSet, state: &[f64], taus: &[f64]) -> Result<ParticleSet> {
        let s = Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("row");
        let t = Array2::from_shape_vec((1, taus.len()), taus.to_vec()).expect("row");
        let values = self.particles_batch(params, &s, &t)?.reversed_axes();
        Ok(ParticleSet { values, taus: taus.to_vec() })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DuelingNet {
    embed: Embedding,
    common: MlpSpec,
    value: MlpSpec,
    advantage: MlpSpec,
    n_actions: usize,
}

/// Nodes produced by one dueling forward pass.
#[derive(Clone, Copy, Debug)]
pub struct DuelingOutput {
    /// `(B·N) × 1` state-value particles.
    pub value: Var,
    /// `B × |A|` advantages.
    pub advantage: Var,
}

impl DuelingNet {
    pub fn new(n_state: usize, n_actions: usize, cfg: &GeneratorConfig) -> Result<Self> {
        let mut widths = vec![cfg.embed_width];
        widths.extend(&cfg.hidden);
        let top = *widths.last().expect("non-empty");
        Ok(DuelingNet {
            embed: Embedding::new(n_state, cfg)?,
            common: MlpSpec::new(widths, cfg.activation, cfg.init)?,
            value: MlpSpec::new(vec![top, 1], Activation::Identity, cfg.init)?,
            advantage: MlpSpec::new(vec![top, n_actions], Activation::Identity, cfg.init)?,
            n_actions,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_state(&self) -> usize {
        self.embed.state.input_width()
    }

    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamSet {
        let mut p = ParamSet::default();
        self.embed.init_into(rng, &mut p);
        self.common.init_into("common", rng, &mut p);
        self.value.init_into("value", rng, &mut p);
        self.advantage.init_into("adv", rng, &mut p);
        p
    }

    pub fn forward(&self, tape: &mut Tape, p: &[Var], states: &Array2<f64>, taus: &Array2<f64>) -> DuelingOutput {
        let n = taus.ncols();
        let k = self.embed.n_tensors();
        let c = self.common.n_tensors();
        let v = self.value.n_tensors();
        let fused = self.embed.forward(tape, &p[..k], states, taus);
        let common = self.common.forward(tape, &p[k..k + c], fused, true);
        let value = self.value.forward(tape, &p[k + c..k + c + v], common, false);
        let pooled = tape.mean_groups(common, n);
        let advantage = self.advantage.forward(tape, &p[k + c + v..], pooled, false);
        DuelingOutput { value, advantage }
    }

    /// State-value particles `[B·N]` and advantages `B × |A|`.
    pub fn evaluate_batch(
        &self,
        params: &ParamSet,
        states: &Array2<f64>,
        taus: &Array2<f64>,
    ) -> Result<(Array1<f64>, Array2<f64>)> {
        check_state(states, self.n_state())?;
        check_taus(taus)?;
        let mut tape = Tape::new();
        let p = params.bind(&mut tape);
        let out = self.forward(&mut tape, &p, states, taus);
        let value = tape.value(out.value).column(0).to_owned();
        Ok((value, tape.value(out.advantage).clone()))
    }

    /// `(state-value particles [N], advantages [|A|])` for one state.
    pub fn evaluate(&self, params: &ParamSet, state: &[f64], taus: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let s = Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("row");
        let t = Array2::from_shape_vec((1, taus.len()), taus.to_vec()).expect("row");
        let (v, a) = self.evaluate_batch(params, &s, &t)?;
        Ok((v.to_vec(), a.row(0).to_vec()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscriminatorConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub init: Init,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        DiscriminatorConfig { hidden: vec![64, 64], activation: Activation::default(), init: Init::UniformFanIn }
    }
}

/// Scalar critic over a particle value, optionally followed by extra
/// conditioning inputs. Input rows are `[x, cond...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorNet {
    mlp: MlpSpec,
}

impl DiscriminatorNet {
    pub fn new(cond_width: usize, cfg: &DiscriminatorConfig) -> Result<Self> {
        let mut widths = vec![1 + cond_width];
        widths.extend(&cfg.hidden);
        widths.push(1);
        Ok(DiscriminatorNet { mlp: MlpSpec::new(widths, cfg.activation, cfg.init)? })
    }

    pub fn from_spec(mlp: MlpSpec) -> Result<Self> {
        mlp.validate()?;
        if mlp.output_width() != 1 {
            return Err(Error::shape("discriminator needs a single output"));
        }
        Ok(DiscriminatorNet { mlp })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.mlp
    }

    pub fn input_width(&self) -> usize {
        self.mlp.input_width()
    }

    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamSet {
        let mut p = ParamSet::default();
        self.mlp.init_into("d", rng, &mut p);
        p
    }

    /// `R × 1` scores.
    pub fn forward(&self, tape: &mut Tape, p: &[Var], x: Var) -> Var {
        self.mlp.forward(tape, p, x, false)
    }

    /// Scores and `∂D/∂x` (first input column), both `R × 1`. The derivative
    /// is itself a graph node: a product of weight matrices and activation
    /// slope diagonals, so penalties on it differentiate with respect to the
    /// weights by an ordinary reverse sweep.
    pub fn forward_with_input_grad(&self, tape: &mut Tape, p: &[Var], x: Var) -> (Var, Var) {
        let rows = tape.value(x).nrows();
        let w0_row = tape.row(p[0], 0);
        let mut delta = tape.broadcast_rows(w0_row, rows);
        let mut h = x;
        let last = self.mlp.n_layers() - 1;
        for l in 0..=last {
            let z = tape.matmul(h, p[2 * l]);
            let z = tape.add_row(z, p[2 * l + 1]);
            if l == last {
                h = z;
                break;
            }
            h = self.mlp.activation.apply(tape, z);
            if let Some(d) = self.mlp.activation.derivative(tape, z, h) {
                delta = tape.mul(delta, d);
            }
            delta = tape.matmul(delta, p[2 * (l + 1)]);
        }
        (h, delta)
    }

    /// `coef · mean((|∂D/∂x̂| − 1)²)` over the rows of `x_hat`.
    pub fn gradient_penalty(&self, tape: &mut Tape, p: &[Var], x_hat: Var, coef: f64) -> Var {
        let (_, g) = self.forward_with_input_grad(tape, p, x_hat);
        let a = tape.abs(g);
        let a = tape.offset(a, -1.0);
        let sq = tape.square(a);
        let m = tape.mean(sq);
        tape.scale(m, coef)
    }

    fn input(&self, x: &[f64]) -> Result<Array2<f64>> {
        if self.input_width() != 1 {
            return Err(Error::shape("scalar evaluation needs an unconditioned discriminator"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::shape("discriminator input is not finite"));
        }
        Ok(Array2::from_shape_vec((x.len(), 1), x.to_vec()).expect("column"))
    }

    pub fn score(&self, params: &ParamSet, x: f64) -> Result<f64> {
        let mut tape = Tape::new();
        let p = params.bind(&mut tape);
        let xv = tape.leaf(self.input(&[x])?);
        let out = self.forward(&mut tape, &p, xv);
        Ok(tape.value(out)[[0, 0]])
    }

    pub fn input_gradient(&self, params: &ParamSet, x: f64) -> Result<f64> {
        let mut tape = Tape::new();
        let p = params.bind(&mut tape);
        let xv = tape.leaf(self.input(&[x])?);
        let (_, g) = self.forward_with_input_grad(&mut tape, &p, xv);
        Ok(tape.value(g)[[0, 0]])
    }

    /// Penalty value for a batch of scalar points.
    pub fn penalty_value(&self, params: &ParamSet, x_hat: &[f64], coef: f64) -> Result<f64> {
        let mut tape = Tape::new();
        let p = params.bind(&mut tape);
        let xv = tape.leaf(self.input(x_hat)?);
        let gp = self.gradient_penalty(&mut tape, &p, xv, coef);
        Ok(tape.scalar(gp))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QNetConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub init: Init,
}

impl Default for QNetConfig {
    fn default() -> Self {
        QNetConfig { hidden: vec![128, 64], activation: Activation::default(), init: Init::UniformFanIn }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QNet {
    mlp: MlpSpec,
}

impl QNet {
    pub fn new(n_state: usize, n_actions: usize, cfg: &QNetConfig) -> Result<Self> {
        let mut widths = vec![n_state];
        widths.extend(&cfg.hidden);
        widths.push(n_actions);
        Ok(QNet { mlp: MlpSpec::new(widths, cfg.activation, cfg.init)? })
    }

    pub fn n_actions(&self) -> usize {
        self.mlp.output_width()
    }

    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamSet {
        let mut p = ParamSet::default();
        self.mlp.init_into("q", rng, &mut p);
        p
    }

    /// `B × |A|` action values.
    pub fn forward(&self, tape: &mut Tape, p: &[Var], states: &Array2<f64>) -> Var {
        let s = tape.leaf(states.clone());
        self.mlp.forward(tape, p, s, false)
    }

    pub fn q_values_batch(&self, params: &ParamSet, states: &Array2<f64>) -> Result<Array2<f64>> {
        check_state(states, self.mlp.input_width())?;
        let mut tape = Tape::new();
        let p = params.bind(&mut tape);
        let out = self.forward(&mut tape, &p, states);
        Ok(tape.value(out).clone())
    }

    pub fn q_values(&self, params: &ParamSet, state: &[f64]) -> Result<Vec<f64>> {
        let s = Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("row");
        Ok(self.q_values_batch(params, &s)?.row(0).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use ndarray::array;

    fn small_cfg() -> GeneratorConfig {
        GeneratorConfig { embed_width: 8, hidden: vec![12, 8], ..Default::default() }
    }

    #[test]
    fn generator_shapes_and_determinism() {
        let net = GeneratorNet::new(3, 5, &small_cfg()).unwrap();
        let p = net.init(&mut stream(1, Stream::Init));
        let a = net.particles(&p, &[0.1, 0.5, 0.9], &[0.3]).unwrap();
        assert_eq!(a.values.dim(), (5, 1));
        let taus = [0.1, 0.4, 0.8];
        let x = net.particles(&p, &[0.1, 0.5, 0.9], &taus).unwrap();
        let y = net.particles(&p, &[0.1, 0.5, 0.9], &taus).unwrap();
        assert_eq!(x.values.dim(), (5, 3));
        assert_eq!(x, y);
        assert!(net.particles(&p, &[0.1, 0.5], &taus).is_err());
        assert!(net.particles(&p, &[0.1, 0.5, 0.9], &[0.0]).is_err());
    }

    #[test]
    fn zeroed_output_layer_emits_its_bias() {
        let net = GeneratorNet::new(3, 4, &small_cfg()).unwrap();
        let mut p = net.init(&mut stream(2, Stream::Init));
        let n = p.len();
        p.tensors[n - 2].1.fill(0.0);
        p.tensors[n - 1].1 = array![[0.5, -1.0, 2.0, 3.0]];
        let out = net.particles(&p, &[0.2, 0.2, 0.2], &[0.1, 0.7]).unwrap();
        for (a, row) in out.values.outer_iter().enumerate() {
            assert!(row.iter().all(|v| *v == [0.5, -1.0, 2.0, 3.0][a]));
        }
    }

    #[test]
    fn cosine_front_end_changes_tau_width() {
        let cfg = GeneratorConfig { cosine_features: Some(16), ..small_cfg() };
        let net = GeneratorNet::new(3, 2, &cfg).unwrap();
        let p = net.init(&mut stream(2, Stream::Init));
        assert_eq!(p.get("tau.0.w").unwrap().dim(), (16, 8));
        assert_eq!(net.particles(&p, &[0.0; 3], &[0.5, 0.6]).unwrap().values.dim(), (2, 2));
    }

    #[test]
    fn dueling_shapes_and_zero_advantage() {
        let net = DuelingNet::new(3, 6, &small_cfg()).unwrap();
        let mut p = net.init(&mut stream(3, Stream::Init));
        let (v, a) = net.evaluate(&p, &[0.3, 0.3, 0.3], &[0.2, 0.5, 0.9, 0.95]).unwrap();
        assert_eq!((v.len(), a.len()), (4, 6));
        for name in ["adv.0.w", "adv.0.b"] {
            p.get_mut(name).unwrap().fill(0.0);
        }
        let (_, a) = net.evaluate(&p, &[0.3, 0.3, 0.3], &[0.2, 0.5]).unwrap();
        assert!(a.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn discriminator_degenerate_cases() {
        let cfg = DiscriminatorConfig { hidden: vec![4], ..Default::default() };
        let net = DiscriminatorNet::new(0, &cfg).unwrap();
        let mut p = net.init(&mut stream(4, Stream::Init));
        for (_, t) in p.tensors.iter_mut().take(3) {
            t.fill(0.0);
        }
        p.tensors[3].1[[0, 0]] = 0.7;
        for x in [-3.0, 0.0, 5.0] {
            assert_eq!(net.score(&p, x).unwrap(), 0.7);
        }
        assert!(net.score(&p, f64::NAN).is_err());

        let linear = DiscriminatorNet::from_spec(
            MlpSpec::new(vec![1, 1], Activation::Identity, Init::UniformFanIn).unwrap(),
        )
        .unwrap();
        let p = ParamSet {
            tensors: vec![("d.0.w".into(), array![[2.0]]), ("d.0.b".into(), array![[0.0]])],
            version: 0,
        };
        assert_eq!(linear.score(&p, 3.0).unwrap(), 6.0);
        assert_eq!(linear.input_gradient(&p, -4.0).unwrap(), 2.0);
        // |g| = 2 with coefficient 5 gives 5·(2-1)² = 5
        assert_eq!(linear.penalty_value(&p, &[0.1, 0.2], 5.0).unwrap(), 5.0);
        let zero = ParamSet {
            tensors: vec![("d.0.w".into(), array![[0.0]]), ("d.0.b".into(), array![[0.0]])],
            version: 0,
        };
        assert_eq!(linear.penalty_value(&zero, &[1.0], 1.0).unwrap(), 1.0);
    }

    #[test]
    fn qnet_shapes() {
        let net = QNet::new(3, 36, &QNetConfig::default()).unwrap();
        let p = net.init(&mut stream(5, Stream::Init));
        assert_eq!(p.shapes(), vec![(3, 128), (1, 128), (128, 64), (1, 64), (64, 36), (1, 36)]);
        assert_eq!(net.q_values(&p, &[0.1, 0.2, 0.3]).unwrap().len(), 36);
    }
}
