//! A minimal tape for first-order reverse-mode differentiation over matrices.
//!
//! Every value is a 2-D `f64` matrix; scalars are `1×1`. Nodes are appended in
//! evaluation order, so a reverse sweep over the tape visits every node after
//! all of its consumers.

use ndarray::{s, Array2, Axis, Zip};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `a + row` with a `1×c` row broadcast over every row of `a`.
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Offset(Var),
    LeakyRelu(Var, f64),
    Tanh(Var),
    /// `1 - t²` where `t` is a tanh output.
    TanhDeriv(Var),
    Abs(Var),
    Square(Var),
    /// `1×c` to `rows×c`.
    BroadcastRows(Var),
    /// Each row repeated `k` times consecutively.
    RepeatRows(Var, usize),
    /// Mean over consecutive groups of `k` rows.
    MeanGroups(Var, usize),
    /// Row `i` of a matrix, as `1×c`.
    Row(Var, usize),
    /// One column per row, `r×c` to `r×1`.
    Gather(Var, Vec<usize>),
    Mean(Var),
}

#[derive(Clone, Debug)]
struct Node {
    value: Array2<f64>,
    op: Op,
}

#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one scalar with respect to every node of a tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Array2<f64>> {
        self.grads[v.0].as_ref()
    }

    /// Gradient of `v`, or zeros when the loss does not depend on it.
    pub fn take(&mut self, v: Var) -> Array2<f64> {
        self.grads[v.0].take().unwrap_or_else(|| Array2::zeros(self.shapes[v.0]))
    }

    pub fn take_all(&mut self, vars: &[Var]) -> Vec<Array2<f64>> {
        vars.iter().map(|&v| self.take(v)).collect()
    }
}

fn leaky_slope(x: f64, slope: f64) -> f64 {
    // the kink takes the positive-side slope
    if x >= 0.0 {
        1.0
    } else {
        slope
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let val = self.value(v);
        debug_assert_eq!(val.dim(), (1, 1));
        val[[0, 0]]
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        debug_assert_eq!(self.value(row).nrows(), 1);
        let v = self.value(a) + self.value(row);
        self.push(v, Op::AddRow(a, row))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(v, Op::Sub(a, b))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let v = self.value(a) * k;
        self.push(v, Op::Scale(a, k))
    }

    pub fn offset(&mut self, a: Var, k: f64) -> Var {
        let v = self.value(a) + k;
        self.push(v, Op::Offset(a))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let v = self.value(a).mapv(|x| x * leaky_slope(x, slope));
        self.push(v, Op::LeakyRelu(a, slope))
    }

    /// Derivative mask of a leaky ReLU evaluated at `pre`, as a constant.
    pub fn leaky_relu_mask(&mut self, pre: Var, slope: f64) -> Var {
        let v = self.value(pre).mapv(|x| leaky_slope(x, slope));
        self.leaf(v)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn tanh_deriv(&mut self, t: Var) -> Var {
        let v = self.value(t).mapv(|y| 1.0 - y * y);
        self.push(v, Op::TanhDeriv(t))
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::abs);
        self.push(v, Op::Abs(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| x * x);
        self.push(v, Op::Square(a))
    }

    pub fn broadcast_rows(&mut self, a: Var, rows: usize) -> Var {
        let row = self.value(a);
        debug_assert_eq!(row.nrows(), 1);
        let v = row.broadcast((rows, row.ncols())).expect("1×c broadcasts").to_owned();
        self.push(v, Op::BroadcastRows(a))
    }

    pub fn repeat_rows(&mut self, a: Var, k: usize) -> Var {
        let src = self.value(a);
        let (r, c) = src.dim();
        let mut v = Array2::zeros((r * k, c));
        for (i, row) in src.outer_iter().enumerate() {
            v.slice_mut(s![i * k..(i + 1) * k, ..]).assign(&row.broadcast((k, c)).expect("row broadcasts"));
        }
        self.push(v, Op::RepeatRows(a, k))
    }

    pub fn mean_groups(&mut self, a: Var, k: usize) -> Var {
        let src = self.value(a);
        let (r, c) = src.dim();
        debug_assert_eq!(r % k, 0);
        let mut v = Array2::zeros((r / k, c));
        for (i, mut out) in v.outer_iter_mut().enumerate() {
            out.assign(&src.slice(s![i * k..(i + 1) * k, ..]).mean_axis(Axis(0)).expect("non-empty group"));
        }
        self.push(v, Op::MeanGroups(a, k))
    }

    pub fn row(&mut self, a: Var, i: usize) -> Var {
        let v = self.value(a).slice(s![i..i + 1, ..]).to_owned();
        self.push(v, Op::Row(a, i))
    }

    pub fn gather(&mut self, a: Var, cols: Vec<usize>) -> Var {
        let src = self.value(a);
        debug_assert_eq!(src.nrows(), cols.len());
        let v = Array2::from_shape_fn((cols.len(), 1), |(i, _)| src[[i, cols[i]]]);
        self.push(v, Op::Gather(a, cols))
    }

    /// Mean of every element, as `1×1`.
    pub fn mean(&mut self, a: Var) -> Var {
        let m = self.value(a).mean().unwrap_or(0.0);
        self.push(Array2::from_elem((1, 1), m), Op::Mean(a))
    }

    /// Reverse sweep from a `1×1` output.
    pub fn backward(&self, output: Var) -> Gradients {
        assert_eq!(self.value(output).dim(), (1, 1), "backward needs a scalar output");
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; output.0 + 1];
        grads[output.0] = Some(Array2::ones((1, 1)));

        fn acc(grads: &mut [Option<Array2<f64>>], v: Var, g: Array2<f64>) {
            match &mut grads[v.0] {
                Some(existing) => *existing += &g,
                slot => *slot = Some(g),
            }
        }

        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::AddRow(a, row) => {
                    let grow = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads, *row, grow);
                    acc(&mut grads, *a, g);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *b, g.clone());
                    acc(&mut grads, *a, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *b, -&g);
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let ga = &g * self.value(*b);
                    let gb = &g * self.value(*a);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Scale(a, k) => acc(&mut grads, *a, g * *k),
                Op::Offset(a) => acc(&mut grads, *a, g),
                Op::LeakyRelu(a, slope) => {
                    let mut ga = g;
                    Zip::from(&mut ga).and(self.value(*a)).for_each(|gv, &x| *gv *= leaky_slope(x, *slope));
                    acc(&mut grads, *a, ga);
                }
                Op::Tanh(a) => {
                    let mut ga = g;
                    Zip::from(&mut ga).and(&node.value).for_each(|gv, &y| *gv *= 1.0 - y * y);
                    acc(&mut grads, *a, ga);
                }
                Op::TanhDeriv(t) => {
                    let mut gt = g;
                    Zip::from(&mut gt).and(self.value(*t)).for_each(|gv, &y| *gv *= -2.0 * y);
                    acc(&mut grads, *t, gt);
                }
                Op::Abs(a) => {
                    let mut ga = g;
                    Zip::from(&mut ga).and(self.value(*a)).for_each(|gv, &x| *gv *= sign(x));
                    acc(&mut grads, *a, ga);
                }
                Op::Square(a) => {
                    let mut ga = g;
                    Zip::from(&mut ga).and(self.value(*a)).for_each(|gv, &x| *gv *= 2.0 * x);
                    acc(&mut grads, *a, ga);
                }
                Op::BroadcastRows(a) => {
                    acc(&mut grads, *a, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
                Op::RepeatRows(a, k) => {
                    let (r, c) = self.value(*a).dim();
                    let mut ga = Array2::zeros((r, c));
                    for (i, mut out) in ga.outer_iter_mut().enumerate() {
                        out.assign(&g.slice(s![i * k..(i + 1) * k, ..]).sum_axis(Axis(0)));
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::MeanGroups(a, k) => {
                    let (r, c) = self.value(*a).dim();
                    let mut ga = Array2::zeros((r, c));
                    let inv = 1.0 / *k as f64;
                    for (i, row) in g.outer_iter().enumerate() {
                        let scaled = &row * inv;
                        ga.slice_mut(s![i * k..(i + 1) * k, ..])
                            .assign(&scaled.broadcast((*k, c)).expect("row broadcasts"));
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Row(a, r) => {
                    let mut ga = Array2::zeros(self.value(*a).dim());
                    ga.slice_mut(s![*r..*r + 1, ..]).assign(&g);
                    acc(&mut grads, *a, ga);
                }
                Op::Gather(a, cols) => {
                    let mut ga = Array2::zeros(self.value(*a).dim());
                    for (i, &c) in cols.iter().enumerate() {
                        ga[[i, c]] = g[[i, 0]];
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Mean(a) => {
                    let shape = self.value(*a).dim();
                    let n = (shape.0 * shape.1).max(1) as f64;
                    acc(&mut grads, *a, Array2::from_elem(shape, g[[0, 0]] / n));
                }
            }
        }
        // only leaf gradients survive the sweep
        grads.resize(self.nodes.len(), None);
        Gradients { grads, shapes: self.nodes.iter().map(|n| n.value.dim()).collect() }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
