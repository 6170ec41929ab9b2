//! Evaluates every fixed bandwidth split for a few decision steps and prints
//! the mean utility, SE and per-slice SSR of each, best first.
//!
//! ```bash
//! cargo run --release -p netslice --example static_sweep -- 30
//! ```

use netslice::env::{EnvConfig, Environment, UrllcRegime};

fn main() -> anyhow::Result<()> {
    let steps: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let mut cfg = EnvConfig::standard(UrllcRegime::Small);
    cfg.seed = 1;
    cfg.warmup_steps = 0;
    let probe = Environment::new(cfg.clone())?;
    let hard = probe.hard_action_index();

    let mut rows = Vec::new();
    for action in probe.actions() {
        let mut env = Environment::new(cfg.clone())?;
        let (mut j, mut j2, mut se, mut ssr) = (0.0, 0.0, 0.0, [0.0; 3]);
        for _ in 0..steps {
            let (_, m) = env.step(action.index)?;
            j += m.utility;
            j2 += m.utility * m.utility;
            se += m.se;
            for (acc, s) in ssr.iter_mut().zip(&m.ssr) {
                *acc += s;
            }
        }
        let k = steps as f64;
        let sd = (j2 / k - (j / k).powi(2)).max(0.0).sqrt();
        rows.push((j / k, sd, se / k, ssr.map(|s| s / k), action.units.clone(), action.index));
    }
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    println!("{:>6} {:>12} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}", "index", "units", "J", "sd(J)", "SE", "volte", "video", "urllc");
    for (j, sd, se, ssr, units, idx) in &rows {
        let mark = if *idx == hard { " <- hard" } else { "" };
        println!(
            "{idx:>6} {:>12} {j:>8.4} {sd:>8.4} {se:>8.3} {:>8.4} {:>8.4} {:>8.4}{mark}",
            format!("{units:?}"),
            ssr[0],
            ssr[1],
            ssr[2]
        );
    }
    Ok(())
}
