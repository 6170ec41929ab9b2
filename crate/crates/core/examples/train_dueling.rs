//! Trains Dueling GAN-DDQN next to the hard split on the same traffic and
//! prints the per-slice satisfaction of both.
//!
//! ```bash
//! cargo run --release -p netslice --example train_dueling -- 5000
//! ```

use netslice::agents::Algo;
use netslice::harness::{run_many, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let iterations: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let configs: Vec<ExperimentConfig> = [Algo::Dueling, Algo::Hard]
        .into_iter()
        .map(|algo| {
            let mut cfg = ExperimentConfig::standard(algo, 1);
            cfg.iterations = iterations;
            cfg.eval_window = cfg.eval_window.min(iterations);
            cfg
        })
        .collect();
    let runs = run_many(&configs, 2);
    println!("{:<8} {:>8} {:>7} {:>7} {:>7} {:>7}", "policy", "J", "SE", "volte", "video", "urllc");
    for (cfg, run) in configs.iter().zip(runs) {
        let s = run?.summary;
        println!(
            "{:<8} {:>8.4} {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
            cfg.agent.algo.name(),
            s.mean_utility,
            s.mean_se,
            s.mean_ssr[0],
            s.mean_ssr[1],
            s.mean_ssr[2]
        );
    }
    Ok(())
}
