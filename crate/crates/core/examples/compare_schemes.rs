//! Train every policy on the same environment and rank them.
//!
//! Usage: `compare_schemes [iterations] [seed]` (defaults 5000, 1).

use anyhow::Result;
use netslice::agents::Algo;
use netslice::harness::{compare, default_workers, run_many, ExperimentConfig};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let algos = [Algo::Hard, Algo::GanDdqn, Algo::Dueling, Algo::Dqn];
    let configs: Vec<ExperimentConfig> = algos
        .iter()
        .map(|&algo| {
            let mut cfg = ExperimentConfig::standard(algo, seed);
            cfg.iterations = iterations;
            cfg.eval_window = cfg.eval_window.min(iterations);
            cfg
        })
        .collect();

    let started = std::time::Instant::now();
    let mut runs = Vec::new();
    for (cfg, out) in configs.iter().zip(run_many(&configs, default_workers())) {
        runs.push((cfg.agent.algo.name().to_string(), out?.summary));
    }
    println!("{} iterations, seed {seed}, {:.1} s\n", iterations, started.elapsed().as_secs_f64());
    print!("{}", compare(&runs)?.to_text());
    Ok(())
}
