use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use netslice::dirac::{self, DiracConfig, UpdateMode};
use netslice::env::enumerate_actions;
use netslice::harness::{self, ExperimentConfig};
use netslice::nn::checkpoint;
use netslice::{Error, Result};

#[derive(Parser)]
#[command(name = "netslice", version, about = "Bandwidth slicing with distributional deep Q-learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent and write metrics, summary and checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy rollout of a checkpoint for the config's eval window.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Rank finished runs (directories or summary files) by mean utility.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        runs: Vec<PathBuf>,
        /// Also write compare.csv and compare.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the point-mass WGAN-GP dynamics and print the trajectory CSV.
    DiracLab {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        steps: usize,
        /// `step:xi` pairs, e.g. `0:1,5000:3`.
        #[arg(long, default_value = "0:1")]
        xi_schedule: String,
        #[arg(long)]
        theta0: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        psi0: f64,
        #[arg(long, value_enum, default_value_t = Mode::Alternating)]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List every bandwidth split at the given resolution.
    EnumerateActions {
        /// Total bandwidth in Hz.
        #[arg(long)]
        bandwidth: u64,
        /// Allocation granularity in Hz.
        #[arg(long)]
        resolution: u64,
        #[arg(long, default_value_t = 3)]
        slices: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Alternating,
    Simultaneous,
}

fn parse_schedule(text: &str) -> Result<Vec<(usize, f64)>> {
    text.split(',')
        .map(|pair| {
            let (s, x) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("schedule entry {pair:?} is not step:xi")))?;
            let step = s.trim().parse().map_err(|_| Error::Config(format!("bad step in {pair:?}")))?;
            let xi = x.trim().parse().map_err(|_| Error::Config(format!("bad xi in {pair:?}")))?;
            Ok((step, xi))
        })
        .collect()
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let mut cfg = ExperimentConfig::from_json_file(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if out.is_some() {
                cfg.output_dir = out;
            }
            let result = harness::run_experiment(&cfg)?;
            print_json(&result.summary)
        }
        Command::Eval { checkpoint: ckpt, config } => {
            let cfg = ExperimentConfig::from_json_file(&config)?;
            let params = checkpoint::load(&ckpt)?;
            print_json(&harness::evaluate(&cfg, &params)?)
        }
        Command::Compare { runs, out } => {
            let summaries = runs
                .iter()
                .map(|p| Ok((p.display().to_string(), harness::load_summary(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let report = harness::compare(&summaries)?;
            let text = report.to_text();
            print!("{text}");
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("compare.csv"), report.to_csv()?)?;
                fs::write(dir.join("compare.txt"), text)?;
            }
            Ok(())
        }
        Command::DiracLab { h, lambda, steps, xi_schedule, theta0, psi0, mode, out } => {
            let schedule = parse_schedule(&xi_schedule)?;
            let cfg = DiracConfig {
                theta0: theta0.unwrap_or(schedule.first().map_or(0.0, |s| s.1)),
                psi0,
                xi_schedule: schedule,
                update_mode: match mode {
                    Mode::Alternating => UpdateMode::Alternating,
                    Mode::Simultaneous => UpdateMode::Simultaneous,
                },
                ..DiracConfig::new(h, lambda, steps, 0.0)
            };
            let traj = dirac::simulate(&cfg)?;
            match out {
                Some(path) => traj.write_csv(fs::File::create(path)?),
                None => traj.write_csv(io::stdout().lock()),
            }
        }
        Command::EnumerateActions { bandwidth, resolution, slices } => {
            let actions = enumerate_actions(bandwidth, resolution, slices)?;
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{} actions", actions.len())?;
            for a in &actions {
                let units: Vec<String> = a.units.iter().map(u64::to_string).collect();
                writeln!(stdout, "{:>5}  [{}]", a.index, units.join(", "))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
