//! The point-mass WGAN-GP toy. First a fixed target, where the generator
//! stalls short of it while the critic weight chatters around zero; then a
//! target that jumps, showing how recovery time grows with the jump size.
//!
//! ```bash
//! cargo run --release -p netslice --example dirac_oscillation
//! ```

use netslice::dirac::{simulate, steps_to_reconverge, DiracConfig, ReconvergenceStudy};

fn main() -> anyhow::Result<()> {
    let (h, lambda) = (0.01, 10.0);
    let traj = simulate(&DiracConfig { theta0: 0.0, ..DiracConfig::new(h, lambda, 100_000, 1.0) })?;
    let (lo, hi) = traj.tail_theta_range(1000);
    let psi_tail: Vec<f64> = traj.points[traj.points.len() - 1000..].iter().map(|p| p.psi).collect();
    let psi_step = psi_tail.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / 999.0;
    println!("fixed target xi = 1, h = {h}, lambda = {lambda}, from theta = 0:");
    println!("  theta tail range [{lo:.4}, {hi:.4}], mean |dtheta| {:.5}", traj.tail_theta_step(1000));
    println!("  mean |dpsi| over the tail {psi_step:.4} (h*lambda = {})", h * lambda);

    let (h, warmup, horizon) = (0.039, 3000, 40_000);
    println!("\njump from xi = 0 to xi = delta after {warmup} steps, h = {h}:");
    for delta in [0.5, 1.0, 2.0, 4.0] {
        let mut cfg = DiracConfig::new(h, lambda, warmup + horizon, 0.0);
        cfg.xi_schedule.push((warmup, delta));
        let traj = simulate(&cfg)?;
        match steps_to_reconverge(&traj, delta, 0.2)? {
            Some(k) => println!("  delta {delta}: settled within 0.2 after {k} steps"),
            None => println!("  delta {delta}: not settled within {horizon} steps"),
        }
    }

    let study = ReconvergenceStudy::standard();
    println!("\nsame jumps averaged over {} random starts:", study.seeds.len());
    for row in study.run()? {
        let mean = row.mean_steps.map_or("-".to_string(), |m| format!("{m:.0}"));
        println!("  delta {}: mean {mean} steps, {} unsettled", row.delta, row.unsettled);
    }
    Ok(())
}
