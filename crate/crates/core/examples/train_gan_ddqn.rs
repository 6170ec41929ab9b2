//! Trains GAN-DDQN on the standard three-slice cell and writes the run
//! directory (config, per-iteration metrics, summary, checkpoint).
//!
//! ```bash
//! cargo run --release -p netslice --example train_gan_ddqn -- 5000 runs/gan
//! ```

use netslice::agents::Algo;
use netslice::harness::{run_experiment, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let out = args.next().unwrap_or_else(|| "runs/gan_ddqn".into());

    let mut cfg = ExperimentConfig::standard(Algo::GanDdqn, 1);
    cfg.iterations = iterations;
    cfg.eval_window = cfg.eval_window.min(iterations);
    cfg.output_dir = Some(out.clone().into());

    let run = run_experiment(&cfg)?;
    for chunk in run.rows.chunks(500) {
        let j = chunk.iter().map(|r| r.utility_raw).sum::<f64>() / chunk.len() as f64;
        let loss = chunk.iter().rev().find_map(|r| r.loss_d.zip(r.loss_g));
        println!("iter {:>5}  mean J {j:.4}  last losses {loss:?}", chunk[0].iteration);
    }
    let s = &run.summary;
    println!("final window: J {:.4}, SE {:.3}, SSR {:?}; written to {out}", s.mean_utility, s.mean_se, s.mean_ssr);
    Ok(())
}
