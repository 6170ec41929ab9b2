//! Fit the generator to a point mass at 3 and to a standard normal, and
//! report the 1-Wasserstein distance after each. The argument counts
//! generator steps; each follows five critic steps.
//!
//! ```bash
//! cargo run --release -p netslice --example wgan_fit -- 1000
//! ```

use netslice::agents::fit::{fit_stationary, FitConfig};
use rand_distr::{Distribution, StandardNormal};

fn main() -> anyhow::Result<()> {
    let updates: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let cfg = FitConfig::new(updates, 7);

    let started = std::time::Instant::now();
    let dirac = fit_stationary(&cfg, |_| 3.0)?;
    let mean = dirac.generated.iter().sum::<f64>() / dirac.generated.len() as f64;
    println!("point mass at 3: W1 {:.4}, particle mean {mean:.4} ({:.1} s)", dirac.w1, started.elapsed().as_secs_f64());

    let started = std::time::Instant::now();
    let normal = fit_stationary(&cfg, |rng| StandardNormal.sample(rng))?;
    let mut g = normal.generated.clone();
    g.sort_by(f64::total_cmp);
    let q = |p: f64| g[((g.len() - 1) as f64 * p) as usize];
    println!(
        "standard normal: W1 {:.4}, quantiles 5/50/95% {:.3} {:.3} {:.3} ({:.1} s)",
        normal.w1,
        q(0.05),
        q(0.5),
        q(0.95),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}
