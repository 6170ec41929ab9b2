//! Counts the bandwidth splits at a few resolutions and shows where the
//! equal split lands in the table.
//!
//! ```bash
//! cargo run -p netslice --example enumerate_actions
//! ```

use netslice::env::{enumerate_actions, near_equal_split};

fn main() -> anyhow::Result<()> {
    let total = 10_000_000;
    for resolution in [2_000_000, 1_000_000, 500_000, 200_000] {
        let actions = enumerate_actions(total, resolution, 3)?;
        let equal = near_equal_split(total / resolution, 3);
        let idx = actions.iter().position(|a| a.units == equal).expect("equal split is feasible");
        println!(
            "{:>5} kHz: {:>5} actions, equal split {:?} at index {idx}",
            resolution / 1000,
            actions.len(),
            equal
        );
    }

    println!("\n1 MHz table:");
    for a in enumerate_actions(total, 1_000_000, 3)? {
        println!("{:>3}  {:?} MHz", a.index, a.units);
    }
    Ok(())
}
