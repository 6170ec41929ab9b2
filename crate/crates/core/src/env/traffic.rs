//! Inter-arrival and packet-size distributions.
//!
//! Heavy-tailed kinds are clamped at their declared maximum and their scale is
//! solved so that the post-clamp mean equals the configured mean.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serialized as `{"kind": "...", "params": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub enum TrafficDistribution {
    Constant { value: f64 },
    Uniform { min: f64, max: f64 },
    TruncatedExponential { mean: f64, max: f64, scale: f64 },
    TruncatedPareto { shape: f64, mean: f64, max: f64, scale: f64 },
    DiscreteUniformSet { values: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawDistribution {
    kind: String,
    params: Vec<f64>,
}

impl TryFrom<RawDistribution> for TrafficDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        let p = &raw.params;
        let want = |n: usize| -> Result<()> {
            if p.len() == n {
                Ok(())
            } else {
                Err(Error::config(format!("distribution '{}' takes {} params, got {}", raw.kind, n, p.len())))
            }
        };
        match raw.kind.as_str() {
            "constant" => {
                want(1)?;
                Self::constant(p[0])
            }
            "uniform" => {
                want(2)?;
                Self::uniform(p[0], p[1])
            }
            "truncated_exponential" => {
                want(2)?;
                Self::truncated_exponential(p[0], p[1])
            }
            "truncated_pareto" => {
                want(3)?;
                Self::truncated_pareto(p[0], p[1], p[2])
            }
            "discrete_uniform_set" => Self::discrete_set(p.clone()),
            other => Err(Error::config(format!("unknown distribution kind '{other}'"))),
        }
    }
}

impl From<TrafficDistribution> for RawDistribution {
    fn from(d: TrafficDistribution) -> Self {
        let (kind, params) = match d {
            TrafficDistribution::Constant { value } => ("constant", vec![value]),
            TrafficDistribution::Uniform { min, max } => ("uniform", vec![min, max]),
            TrafficDistribution::TruncatedExponential { mean, max, .. } => ("truncated_exponential", vec![mean, max]),
            TrafficDistribution::TruncatedPareto { shape, mean, max, .. } => {
                ("truncated_pareto", vec![shape, mean, max])
            }
            TrafficDistribution::DiscreteUniformSet { values } => ("discrete_uniform_set", values),
        };
        RawDistribution { kind: kind.to_string(), params }
    }
}

fn finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

impl TrafficDistribution {
    pub fn constant(value: f64) -> Result<Self> {
        if !finite(&[value]) || value < 0.0 {
            return Err(Error::config("constant must be finite and non-negative"));
        }
        Ok(Self::Constant { value })
    }

    pub fn uniform(min: f64, max: f64) -> Result<Self> {
        if !finite(&[min, max]) || min < 0.0 || max < min {
            return Err(Error::config(format!("bad uniform bounds [{min}, {max}]")));
        }
        Ok(Self::Uniform { min, max })
    }

    /// Exponential clamped at `max`, with the rate solved so the clamped mean is `mean`.
    pub fn truncated_exponential(mean: f64, max: f64) -> Result<Self> {
        if !finite(&[mean, max]) || mean <= 0.0 || max <= mean {
            return Err(Error::config(format!("truncated exponential needs 0 < mean < max, got mean={mean} max={max}")));
        }
        let clamped_mean = |scale: f64| scale * (1.0 - (-max / scale).exp());
        let mut hi = mean;
        while clamped_mean(hi) < mean {
            hi *= 2.0;
        }
        let scale = bisect(clamped_mean, mean, mean * 0.5, hi);
        Ok(Self::TruncatedExponential { mean, max, scale })
    }

    /// Pareto with tail index `shape` clamped at `max`; the scale (minimum value)
    /// is solved so the clamped mean is `mean`.
    pub fn truncated_pareto(shape: f64, mean: f64, max: f64) -> Result<Self> {
        if !finite(&[shape, mean, max]) || shape <= 0.0 || mean <= 0.0 || max <= mean {
            return Err(Error::config(format!(
                "truncated Pareto needs shape > 0 and 0 < mean < max, got shape={shape} mean={mean} max={max}"
            )));
        }
        let scale = bisect(|xm| pareto_clamped_mean(shape, xm, max), mean, 0.0, max);
        Ok(Self::TruncatedPareto { shape, mean, max, scale })
    }

    pub fn discrete_set(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !finite(&values) || values.iter().any(|v| *v < 0.0) {
            return Err(Error::config("discrete set must be non-empty, finite and non-negative"));
        }
        Ok(Self::DiscreteUniformSet { values })
    }

    /// Declared support `[min, max]`.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Self::Constant { value } => (*value, *value),
            Self::Uniform { min, max } => (*min, *max),
            Self::TruncatedExponential { max, .. } => (0.0, *max),
            Self::TruncatedPareto { scale, max, .. } => (*scale, *max),
            Self::DiscreteUniformSet { values } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v))),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Uniform { min, max } => 0.5 * (min + max),
            Self::TruncatedExponential { mean, .. } | Self::TruncatedPareto { mean, .. } => *mean,
            Self::DiscreteUniformSet { values } => values.iter().sum::<f64>() / values.len() as f64,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Uniform { min, max } => min + (max - min) * rng.gen::<f64>(),
            Self::TruncatedExponential { max, scale, .. } => {
                let u: f64 = rng.gen();
                (-scale * (1.0 - u).ln()).min(*max)
            }
            Self::TruncatedPareto { shape, max, scale, .. } => {
                let u: f64 = rng.gen();
                (scale * (1.0 - u).powf(-1.0 / shape)).min(*max)
            }
            Self::DiscreteUniformSet { values } => values[rng.gen_range(0..values.len())],
        }
    }
}

fn pareto_clamped_mean(shape: f64, scale: f64, max: f64) -> f64 {
    if scale <= 0.0 {
        return 0.0;
    }
    if scale >= max {
        return max;
    }
    // E[min(X, M)] = x_m + ∫_{x_m}^{M} (x_m / x)^a dx
    let tail = if (shape - 1.0).abs() < 1e-12 {
        scale * (max / scale).ln()
    } else {
        scale.powf(shape) * (max.powf(1.0 - shape) - scale.powf(1.0 - shape)) / (1.0 - shape)
    };
    scale + tail
}

/// Solves `f(x) = target` for increasing `f` on `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}
