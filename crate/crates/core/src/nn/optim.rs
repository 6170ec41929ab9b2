use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
    RmsProp { decay: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub kind: OptimizerKind,
    /// Global L2 norm cap on the gradient; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        OptimizerConfig { lr, kind: OptimizerKind::adam(), clip_norm: Some(10.0) }
    }

    pub fn sgd(lr: f64) -> Self {
        OptimizerConfig { lr, kind: OptimizerKind::Sgd, clip_norm: None }
    }
}

/// First-order optimizer with per-tensor moment buffers.
#[derive(Clone, Debug)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: u64,
}

pub fn global_norm(grads: &[Array2<f64>]) -> f64 {
    grads.iter().map(|g| g.iter().map(|x| x * x).sum::<f64>()).sum::<f64>().sqrt()
}

impl Optimizer {
    pub fn new(config: OptimizerConfig) -> Self {
        Optimizer { config, m: Vec::new(), v: Vec::new(), t: 0 }
    }

    /// Apply one update in place and bump `params.version`.
    ///
    /// Returns the pre-clipping gradient norm. A non-finite gradient leaves
    /// the parameters untouched and reports divergence.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Array2<f64>]) -> Result<f64> {
        if grads.len() != params.len() {
            return Err(Error::shape(format!("{} gradients for {} tensors", grads.len(), params.len())));
        }
        for ((name, p), g) in params.tensors.iter().zip(grads) {
            if p.dim() != g.dim() {
                return Err(Error::shape(format!("gradient {:?} for {name} {:?}", g.dim(), p.dim())));
            }
        }
        let norm = global_norm(grads);
        if !norm.is_finite() {
            let bad = params
                .tensors
                .iter()
                .zip(grads)
                .find(|(_, g)| g.iter().any(|x| !x.is_finite()))
                .map(|((n, _), _)| n.as_str())
                .unwrap_or("?");
            return Err(Error::Divergence(format!("non-finite gradient in {bad}")));
        }
        let scale = match self.config.clip_norm {
            Some(c) if norm > c => c / norm,
            _ => 1.0,
        };
        if self.m.is_empty() {
            self.m = params.tensors.iter().map(|(_, p)| Array2::zeros(p.dim())).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let lr = self.config.lr;
        for (i, ((_, p), g)) in params.tensors.iter_mut().zip(grads).enumerate() {
            match self.config.kind {
                OptimizerKind::Sgd => p.scaled_add(-lr * scale, g),
                OptimizerKind::Adam { beta1, beta2, eps } => {
                    let c1 = 1.0 - beta1.powi(self.t as i32);
                    let c2 = 1.0 - beta2.powi(self.t as i32);
                    Zip::from(p).and(&mut self.m[i]).and(&mut self.v[i]).and(g).for_each(|p, m, v, &g| {
                        let g = g * scale;
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                    });
                }
                OptimizerKind::RmsProp { decay, eps } => {
                    Zip::from(p).and(&mut self.v[i]).and(g).for_each(|p, v, &g| {
                        let g = g * scale;
                        *v = decay * *v + (1.0 - decay) * g * g;
                        *p -= lr * g / (v.sqrt() + eps);
                    });
                }
            }
        }
        params.version += 1;
        Ok(norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn single(v: f64) -> ParamSet {
        ParamSet { tensors: vec![("x".into(), array![[v]])], version: 0 }
    }

    #[test]
    fn sgd_step() {
        let mut p = single(1.0);
        Optimizer::new(OptimizerConfig::sgd(0.1)).step(&mut p, &[array![[2.0]]]).unwrap();
        assert!((p.tensors[0].1[[0, 0]] - 0.8).abs() < 1e-15);
        assert_eq!(p.version, 1);
    }

    #[test]
    fn zero_lr_leaves_params() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::adam(), OptimizerKind::RmsProp { decay: 0.9, eps: 1e-8 }] {
            let mut p = single(1.5);
            let mut opt = Optimizer::new(OptimizerConfig { lr: 0.0, kind, clip_norm: None });
            opt.step(&mut p, &[array![[3.0]]]).unwrap();
            assert_eq!(p.tensors[0].1[[0, 0]], 1.5);
        }
    }

    #[test]
    fn clipping_caps_applied_norm() {
        let mut p = ParamSet {
            tensors: vec![("a".into(), array![[0.0, 0.0]]), ("b".into(), array![[0.0]])],
            version: 0,
        };
        let grads = [array![[6.0, 0.0]], array![[8.0]]];
        let mut opt = Optimizer::new(OptimizerConfig { lr: 1.0, kind: OptimizerKind::Sgd, clip_norm: Some(1.0) });
        let pre = opt.step(&mut p, &grads).unwrap();
        assert!((pre - 10.0).abs() < 1e-12);
        let applied: Vec<Array2<f64>> = p.tensors.iter().map(|(_, t)| t.clone()).collect();
        assert!((global_norm(&applied) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_is_divergence() {
        let mut p = single(1.0);
        let err = Optimizer::new(OptimizerConfig::adam(1e-3)).step(&mut p, &[array![[f64::NAN]]]).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)));
        assert_eq!(p.tensors[0].1[[0, 0]], 1.0);
        assert!(Optimizer::new(OptimizerConfig::sgd(1.0)).step(&mut p, &[array![[1.0, 2.0]]]).is_err());
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = single(0.0);
        Optimizer::new(OptimizerConfig::adam(0.01)).step(&mut p, &[array![[5.0]]]).unwrap();
        assert!((p.tensors[0].1[[0, 0]] + 0.01).abs() < 1e-9);
    }
}
