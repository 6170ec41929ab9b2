//! Two-parameter WGAN-GP toy: a generator emitting a point mass at `θ`, a
//! linear critic `D(x) = ψ·x` and real data concentrated at `ξ`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Steps `θ` must stay inside the band to count as reconverged.
pub const DWELL: usize = 100;

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `ψθ − ξψ`.
pub fn dirac_loss(theta: f64, psi: f64, xi: f64) -> f64 {
    psi * theta - xi * psi
}

/// `(λ/2)(|ψ| − 1)²`.
pub fn dirac_penalty(psi: f64, lambda: f64) -> f64 {
    let d = psi.abs() - 1.0;
    0.5 * lambda * d * d
}

/// `(−ψ, θ − ξ + sign(ψ)·λ(|ψ| − 1))` with `sign(0) = 0`.
pub fn vector_field(theta: f64, psi: f64, xi: f64, lambda: f64) -> (f64, f64) {
    (-psi, theta - xi + sign(psi) * lambda * (psi.abs() - 1.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Critic steps first, then generator steps using the new `ψ`.
    #[default]
    Alternating,
    /// Both parameters move along the field evaluated at the old point.
    Simultaneous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracConfig {
    /// `(step, ξ)` pairs; the first entry must be at step 0.
    pub xi_schedule: Vec<(usize, f64)>,
    pub h: f64,
    pub lambda: f64,
    pub steps: usize,
    pub theta0: f64,
    pub psi0: f64,
    #[serde(default)]
    pub update_mode: UpdateMode,
    /// Critic and generator updates per alternating iteration.
    #[serde(default = "one")]
    pub critic_steps: usize,
    #[serde(default = "one")]
    pub generator_steps: usize,
}

fn one() -> usize {
    1
}

impl DiracConfig {
    pub fn new(h: f64, lambda: f64, steps: usize, xi: f64) -> Self {
        DiracConfig {
            xi_schedule: vec![(0, xi)],
            h,
            lambda,
            steps,
            theta0: xi,
            psi0: 0.0,
            update_mode: UpdateMode::Alternating,
            critic_steps: 1,
            generator_steps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || self.steps == 0 || !(self.lambda >= 0.0) {
            return Err(Error::config("dirac needs h > 0, lambda >= 0 and at least one step"));
        }
        if self.critic_steps == 0 || self.generator_steps == 0 {
            return Err(Error::config("update ratio needs at least one step on each side"));
        }
        match self.xi_schedule.first() {
            Some((0, _)) => {}
            _ => return Err(Error::config("xi schedule must start at step 0")),
        }
        if self.xi_schedule.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::config("xi schedule steps must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracPoint {
    pub step: usize,
    pub theta: f64,
    pub psi: f64,
    pub xi: f64,
}

/// A target move applied before the update at `step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiEvent {
    pub step: usize,
    pub from: f64,
    pub to: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiracTrajectory {
    /// `steps + 1` points, the initial one included.
    pub points: Vec<DiracPoint>,
    pub events: Vec<XiEvent>,
    pub h: f64,
    pub lambda: f64,
}

pub fn simulate(cfg: &DiracConfig) -> Result<DiracTrajectory> {
    cfg.validate()?;
    let (h, lambda) = (cfg.h, cfg.lambda);
    let mut schedule = cfg.xi_schedule.iter().peekable();
    let mut xi = schedule.next().expect("validated").1;
    let (mut theta, mut psi) = (cfg.theta0, cfg.psi0);
    let mut points = Vec::with_capacity(cfg.steps + 1);
    let mut events = Vec::new();
    points.push(DiracPoint { step: 0, theta, psi, xi });
    for k in 0..cfg.steps {
        if let Some(&&(at, to)) = schedule.peek() {
            if at == k {
                events.push(XiEvent { step: k, from: xi, to });
                xi = to;
                schedule.next();
            }
        }
        match cfg.update_mode {
            UpdateMode::Simultaneous => {
                let (vt, vp) = vector_field(theta, psi, xi, lambda);
                theta += h * vt;
                psi += h * vp;
            }
            UpdateMode::Alternating => {
                for _ in 0..cfg.critic_steps {
                    psi += h * vector_field(theta, psi, xi, lambda).1;
                }
                for _ in 0..cfg.generator_steps {
                    theta += h * vector_field(theta, psi, xi, lambda).0;
                }
            }
        }
        points.push(DiracPoint { step: k + 1, theta, psi, xi });
    }
    Ok(DiracTrajectory { points, events, h, lambda })
}

impl DiracTrajectory {
    /// Mean `|θ_{k+1} − θ_k|` over the last `tail` steps.
    pub fn tail_theta_step(&self, tail: usize) -> f64 {
        let start = self.points.len().saturating_sub(tail + 1);
        let w = &self.points[start..];
        let n = (w.len().saturating_sub(1)).max(1) as f64;
        w.windows(2).map(|p| (p[1].theta - p[0].theta).abs()).sum::<f64>() / n
    }

    /// `(min θ, max θ)` over the last `tail` points.
    pub fn tail_theta_range(&self, tail: usize) -> (f64, f64) {
        let start = self.points.len().saturating_sub(tail);
        self.points[start..]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.theta), hi.max(p.theta)))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "theta", "psi", "xi"])?;
        for p in &self.points {
            w.serialize((p.step, p.theta, p.psi, p.xi))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Steps after the move to `xi_new` until `θ` enters `[ξ_new ± band]` and
/// stays there for [`DWELL`] consecutive points. Counted from the last event
/// that set `xi_new`, or from step 0 when no event did. `None` when the
/// trajectory never settles.
pub fn steps_to_reconverge(traj: &DiracTrajectory, xi_new: f64, band: f64) -> Result<Option<usize>> {
    if !(band > traj.h * traj.lambda / 2.0) {
        return Err(Error::config(format!("band {band} must exceed h·lambda/2 = {}", traj.h * traj.lambda / 2.0)));
    }
    let k0 = traj.events.iter().rev().find(|e| e.to == xi_new).map_or(0, |e| e.step);
    let mut run = 0;
    for p in &traj.points[k0..] {
        if (p.theta - xi_new).abs() <= band {
            run += 1;
            if run == DWELL {
                return Ok(Some(p.step + 1 - DWELL - k0));
            }
        } else {
            run = 0;
        }
    }
    Ok(None)
}

/// Moving-target experiment: settle at `ξ = 0` for `warmup` steps, jump to
/// `ξ = δ`, then count steps until `θ` stays within `band` of `δ`. Initial
/// points are drawn per seed, `θ₀ ~ U(−0.1, 0.1)` and `ψ₀ ~ U(−0.5, 0.5)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconvergenceStudy {
    pub h: f64,
    pub lambda: f64,
    pub deltas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub warmup: usize,
    pub horizon: usize,
    pub band: f64,
    #[serde(default)]
    pub update_mode: UpdateMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconvergenceRow {
    pub delta: f64,
    /// Mean over seeds that settled; `None` when none did.
    pub mean_steps: Option<f64>,
    pub unsettled: usize,
}

impl ReconvergenceStudy {
    pub fn standard() -> Self {
        ReconvergenceStudy {
            h: 0.039,
            lambda: 10.0,
            deltas: vec![0.5, 1.0, 2.0, 4.0],
            seeds: (0..20).collect(),
            warmup: 3000,
            horizon: 40_000,
            band: 0.2,
            update_mode: UpdateMode::Alternating,
        }
    }

    pub fn run(&self) -> Result<Vec<ReconvergenceRow>> {
        use rand::Rng;
        if self.seeds.is_empty() {
            return Err(Error::config("reconvergence study needs at least one seed"));
        }
        let starts: Vec<(f64, f64)> = self
            .seeds
            .iter()
            .map(|&seed| {
                let mut rng = crate::rng::stream(seed, crate::rng::Stream::Init);
                (rng.gen_range(-0.1..0.1), rng.gen_range(-0.5..0.5))
            })
            .collect();
        self.deltas
            .iter()
            .map(|&delta| {
                let mut settled = Vec::new();
                for &(theta0, psi0) in &starts {
                    let cfg = DiracConfig {
                        xi_schedule: vec![(0, 0.0), (self.warmup, delta)],
                        theta0,
                        psi0,
                        update_mode: self.update_mode,
                        ..DiracConfig::new(self.h, self.lambda, self.warmup + self.horizon, 0.0)
                    };
                    if let Some(k) = steps_to_reconverge(&simulate(&cfg)?, delta, self.band)? {
                        settled.push(k as f64);
                    }
                }
                let mean_steps = (!settled.is_empty()).then(|| settled.iter().sum::<f64>() / settled.len() as f64);
                Ok(ReconvergenceRow { delta, mean_steps, unsettled: starts.len() - settled.len() })
            })
            .collect()
    }
}
