//! Experiment orchestration: the observe, act, score, store, train loop,
//! with metrics files, summaries, checkpoints and cross-run reports.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use report::{compare, load_summary, CompareReport, CompareRow};

use crate::agents::{clip_reward, Agent, AgentConfig, Algo, TrainStats, Transition};
use crate::env::{EnvConfig, Environment, Observation, UrllcRegime};
use crate::error::{Error, Result};
use crate::nn::{checkpoint, ParamSet};

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub iterations: usize,
    /// Trailing iterations averaged into the summary.
    pub eval_window: usize,
    /// Master seed; overrides `env.seed` and drives every agent stream.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Fill the `wallclock_ms` column. Off keeps metrics files byte-identical
    /// across repeated runs.
    #[serde(default)]
    pub record_wallclock: bool,
}

impl ExperimentConfig {
    /// Standard three-slice environment with small URLLC packets, 5000
    /// iterations and a 500-iteration summary window.
    pub fn standard(algo: Algo, seed: u64) -> Self {
        ExperimentConfig {
            env: EnvConfig::standard(UrllcRegime::Small),
            agent: AgentConfig::defaults(algo),
            iterations: 5000,
            eval_window: 500,
            seed,
            output_dir: None,
            record_wallclock: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be at least 1"));
        }
        if self.eval_window == 0 || self.eval_window > self.iterations {
            return Err(Error::config(format!(
                "eval_window {} must be in 1..=iterations ({})",
                self.eval_window, self.iterations
            )));
        }
        self.env.validate()?;
        self.agent.validate()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Environment config with the master seed applied.
    pub fn seeded_env(&self) -> EnvConfig {
        EnvConfig { seed: self.seed, ..self.env.clone() }
    }
}

/// One line of `metrics.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: usize,
    pub utility_raw: f64,
    pub reward_clipped: f64,
    pub se: f64,
    pub ssr_volte: f64,
    pub ssr_video: f64,
    pub ssr_urllc: f64,
    pub epsilon: f64,
    pub loss_d: Option<f64>,
    pub loss_g: Option<f64>,
    pub action_index: usize,
    pub wallclock_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algo: Algo,
    pub seed: u64,
    pub iterations: usize,
    pub eval_window: usize,
    /// Means over the last `eval_window` iterations.
    pub mean_utility: f64,
    pub mean_se: f64,
    pub mean_ssr: Vec<f64>,
    /// SSR of the final iteration.
    pub final_ssr: Vec<f64>,
    pub env: EnvConfig,
}

impl Summary {
    fn from_rows(cfg: &ExperimentConfig, env: &EnvConfig, rows: &[MetricsRow], window: usize) -> Summary {
        let tail = &rows[rows.len().saturating_sub(window)..];
        let k = tail.len().max(1) as f64;
        let mean = |f: fn(&MetricsRow) -> f64| tail.iter().map(f).sum::<f64>() / k;
        let ssr = |r: &MetricsRow| vec![r.ssr_volte, r.ssr_video, r.ssr_urllc];
        Summary {
            algo: cfg.agent.algo,
            seed: cfg.seed,
            iterations: rows.len(),
            eval_window: tail.len(),
            mean_utility: mean(|r| r.utility_raw),
            mean_se: mean(|r| r.se),
            mean_ssr: vec![mean(|r| r.ssr_volte), mean(|r| r.ssr_video), mean(|r| r.ssr_urllc)],
            final_ssr: rows.last().map(ssr).unwrap_or_default(),
            env: env.clone(),
        }
    }
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub summary: Summary,
    pub rows: Vec<MetricsRow>,
    pub params: ParamSet,
}

fn slice_ssr(ssr: &[f64], i: usize) -> f64 {
    ssr.get(i).copied().unwrap_or(f64::NAN)
}

fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Train for `iterations` decision steps. With an output directory, writes
/// `config.json`, `metrics.csv`, `summary.json` and `checkpoint.bin`.
///
/// A non-finite loss or gradient stops the run; the last finite parameters
/// and the metrics so far are still written before the error is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let out_dir = cfg.output_dir.as_deref();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        write_json(&dir.join(CONFIG_FILE), cfg)?;
    }
    let env_cfg = cfg.seeded_env();
    let mut env = Environment::new(env_cfg.clone())?;
    let mut agent = Agent::new(cfg.agent.clone(), env.n_slices(), env.n_actions(), env.hard_action_index(), cfg.seed)?;
    let clip = cfg.agent.clip;
    let learns = cfg.agent.algo != Algo::Hard;
    let start = Instant::now();

    let mut rows = Vec::with_capacity(cfg.iterations);
    let mut obs = env.initial_observation();
    let mut last_good = agent.params();
    let mut failure = None;
    for t in 0..cfg.iterations {
        let epsilon = agent.epsilon(t);
        let step = (|| -> Result<(MetricsRow, Observation)> {
            let action = agent.select_action(&obs.normalized, epsilon)?;
            let (next, m) = env.step(action)?;
            let reward = clip.reward(m.utility);
            let mut stats = TrainStats::default();
            if learns {
                agent.observe(Transition {
                    state: obs.normalized.clone(),
                    action,
                    reward,
                    next_state: next.normalized.clone(),
                })?;
                stats = agent.after_step(t)?;
            }
            let row = MetricsRow {
                iteration: t,
                utility_raw: m.utility,
                reward_clipped: clip_reward(m.utility, &clip),
                se: m.se,
                ssr_volte: slice_ssr(&m.ssr, 0),
                ssr_video: slice_ssr(&m.ssr, 1),
                ssr_urllc: slice_ssr(&m.ssr, 2),
                epsilon,
                loss_d: stats.loss_d,
                loss_g: stats.loss_g,
                action_index: action,
                wallclock_ms: cfg.record_wallclock.then(|| start.elapsed().as_millis() as u64),
            };
            Ok((row, next))
        })();
        match step {
            Ok((row, next)) => {
                rows.push(row);
                obs = next;
                if learns {
                    last_good = agent.params();
                }
            }
            Err(e @ Error::Divergence(_)) => {
                failure = Some(e);
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let params = if failure.is_some() { last_good } else { agent.params() };
    let summary = Summary::from_rows(cfg, &env_cfg, &rows, cfg.eval_window);
    if let Some(dir) = out_dir {
        write_metrics(&dir.join(METRICS_FILE), &rows)?;
        checkpoint::save(&params, &dir.join(CHECKPOINT_FILE))?;
        if failure.is_none() {
            write_json(&dir.join(SUMMARY_FILE), &summary)?;
        }
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(RunOutput { summary, rows, params }),
    }
}

/// Greedy rollout of saved parameters for `eval_window` iterations without
/// learning.
pub fn evaluate(cfg: &ExperimentConfig, params: &ParamSet) -> Result<Summary> {
    cfg.validate()?;
    let env_cfg = cfg.seeded_env();
    let mut env = Environment::new(env_cfg.clone())?;
    let mut agent = Agent::new(cfg.agent.clone(), env.n_slices(), env.n_actions(), env.hard_action_index(), cfg.seed)?;
    agent.load_params(params)?;
    let mut obs = env.initial_observation();
    let mut rows = Vec::with_capacity(cfg.eval_window);
    for t in 0..cfg.eval_window {
        let action = agent.select_action(&obs.normalized, 0.0)?;
        let (next, m) = env.step(action)?;
        rows.push(MetricsRow {
            iteration: t,
            utility_raw: m.utility,
            reward_clipped: clip_reward(m.utility, &cfg.agent.clip),
            se: m.se,
            ssr_volte: slice_ssr(&m.ssr, 0),
            ssr_video: slice_ssr(&m.ssr, 1),
            ssr_urllc: slice_ssr(&m.ssr, 2),
            epsilon: 0.0,
            loss_d: None,
            loss_g: None,
            action_index: action,
            wallclock_ms: None,
        });
        obs = next;
    }
    Ok(Summary::from_rows(cfg, &env_cfg, &rows, cfg.eval_window))
}

/// Run independent experiments on up to `workers` threads, preserving order.
pub fn run_many(configs: &[ExperimentConfig], workers: usize) -> Vec<Result<RunOutput>> {
    let workers = workers.max(1);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<RunOutput>>>> =
        configs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers.min(configs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= configs.len() {
                    break;
                }
                let out = run_experiment(&configs[i]);
                *slots[i].lock().expect("unpoisoned") = Some(out);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("unpoisoned").expect("every slot filled")).collect()
}

/// Worker count for [`run_many`]: the machine's parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
