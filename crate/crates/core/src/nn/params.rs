use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::graph::{Tape, Var};
use crate::error::{Error, Result};

/// Named weight matrices plus an update counter.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParamSet {
    pub tensors: Vec<(String, Array2<f64>)>,
    pub version: u64,
}

impl ParamSet {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Array2<f64>> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Array2<f64>> {
        self.tensors.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn n_values(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// Record every tensor on the tape as a leaf, in order.
    pub fn bind(&self, tape: &mut Tape) -> Vec<Var> {
        self.tensors.iter().map(|(_, t)| tape.leaf(t.clone())).collect()
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.tensors.iter().map(|(_, t)| t.dim()).collect()
    }

    /// Fails unless `other` has the same names and shapes.
    pub fn check_compatible(&self, other: &ParamSet) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::shape(format!("{} tensors vs {}", self.len(), other.len())));
        }
        for ((na, ta), (nb, tb)) in self.tensors.iter().zip(&other.tensors) {
            if na != nb || ta.dim() != tb.dim() {
                return Err(Error::shape(format!("{na} {:?} vs {nb} {:?}", ta.dim(), tb.dim())));
            }
        }
        Ok(())
    }
}

/// Deep copy, version included.
pub fn clone_params(src: &ParamSet) -> ParamSet {
    src.clone()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Tanh,
    Identity,
}

impl Default for Activation {
    fn default() -> Self {
        Activation::LeakyRelu { slope: 0.01 }
    }
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::LeakyRelu { slope } => tape.leaky_relu(x, slope),
            Activation::Tanh => tape.tanh(x),
            Activation::Identity => x,
        }
    }

    /// Derivative at pre-activation `pre` given the output `post`, as a node.
    /// Leaky ReLU slopes are piecewise constant, so their mask is a constant.
    pub fn derivative(self, tape: &mut Tape, pre: Var, post: Var) -> Option<Var> {
        match self {
            Activation::LeakyRelu { slope } => Some(tape.leaky_relu_mask(pre, slope)),
            Activation::Tanh => Some(tape.tanh_deriv(post)),
            Activation::Identity => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` for weights and biases.
    #[default]
    UniformFanIn,
    /// Orthonormal weights, zero biases.
    Orthogonal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub init: Init,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>, activation: Activation, init: Init) -> Result<Self> {
        let spec = MlpSpec { layer_widths, activation, init };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 || self.layer_widths.contains(&0) {
            return Err(Error::config(format!("bad layer widths {:?}", self.layer_widths)));
        }
        Ok(())
    }

    pub fn n_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn n_tensors(&self) -> usize {
        2 * self.n_layers()
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().expect("validated")
    }

    /// Append `{prefix}.{l}.w` and `{prefix}.{l}.b` for every layer.
    pub fn init_into<R: Rng + ?Sized>(&self, prefix: &str, rng: &mut R, out: &mut ParamSet) {
        for (l, pair) in self.layer_widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let (w, b) = match self.init {
                Init::UniformFanIn => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    let w = Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-bound..bound));
                    let b = Array2::from_shape_fn((1, fan_out), |_| rng.gen_range(-bound..bound));
                    (w, b)
                }
                Init::Orthogonal => (orthogonal(fan_in, fan_out, rng), Array2::zeros((1, fan_out))),
            };
            out.tensors.push((format!("{prefix}.{l}.w"), w));
            out.tensors.push((format!("{prefix}.{l}.b"), b));
        }
    }

    /// Forward pass over bound parameters `p` (`[w0, b0, w1, b1, ...]`).
    /// Hidden layers are activated; the output layer only when `activate_output`.
    pub fn forward(&self, tape: &mut Tape, p: &[Var], x: Var, activate_output: bool) -> Var {
        debug_assert_eq!(p.len(), self.n_tensors());
        let mut h = x;
        let last = self.n_layers() - 1;
        for l in 0..self.n_layers() {
            let z = tape.matmul(h, p[2 * l]);
            let z = tape.add_row(z, p[2 * l + 1]);
            h = if l < last || activate_output { self.activation.apply(tape, z) } else { z };
        }
        h
    }
}

/// Matrix with orthonormal columns (or rows, when wider than tall), by
/// Gram-Schmidt on a Gaussian draw.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let (tall, short) = (rows.max(cols), rows.min(cols));
    let mut a: Array2<f64> = Array2::from_shape_fn((tall, short), |_| StandardNormal.sample(rng));
    for j in 0..short {
        for k in 0..j {
            let proj = a.column(j).dot(&a.column(k));
            let basis = a.column(k).to_owned();
            a.column_mut(j).scaled_add(-proj, &basis);
        }
        let norm = a.column(j).dot(&a.column(j)).sqrt();
        a.column_mut(j).mapv_inplace(|v| v / norm);
    }
    if rows >= cols {
        a
    } else {
        a.reversed_axes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn orthogonal_columns_are_orthonormal() {
        let mut rng = stream(5, Stream::Init);
        for (r, c) in [(8, 3), (3, 8), (5, 5)] {
            let w = orthogonal(r, c, &mut rng);
            let gram = if r >= c { w.t().dot(&w) } else { w.dot(&w.t()) };
            for ((i, j), v) in gram.indexed_iter() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-12, "{r}x{c} gram[{i},{j}] = {v}");
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(MlpSpec::new(vec![3], Activation::Tanh, Init::UniformFanIn).is_err());
        assert!(MlpSpec::new(vec![3, 0, 1], Activation::Tanh, Init::UniformFanIn).is_err());
        let spec = MlpSpec::new(vec![3, 4, 1], Activation::Tanh, Init::UniformFanIn).unwrap();
        let mut p = ParamSet::default();
        spec.init_into("m", &mut stream(1, Stream::Init), &mut p);
        assert_eq!(p.shapes(), vec![(3, 4), (1, 4), (4, 1), (1, 1)]);
        assert_eq!(p.tensors[2].0, "m.1.w");
    }

    #[test]
    fn clone_is_deep() {
        let spec = MlpSpec::new(vec![2, 2], Activation::Identity, Init::UniformFanIn).unwrap();
        let mut p = ParamSet { version: 7, ..Default::default() };
        spec.init_into("m", &mut stream(1, Stream::Init), &mut p);
        let c = clone_params(&p);
        p.tensors[0].1[[0, 0]] += 1.0;
        assert_eq!(c.version, 7);
        assert_ne!(c.tensors[0].1, p.tensors[0].1);
    }
}
