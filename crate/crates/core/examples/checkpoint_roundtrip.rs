//! Saves a freshly initialised GAN-DDQN agent, reloads it, and checks the
//! tensors and the greedy Q estimates survive bit for bit. Then shows the
//! error a damaged file produces.

use netslice::agents::{Agent, AgentConfig, Algo};
use netslice::nn::checkpoint;

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("agent.bin");

    let mut agent = Agent::new(AgentConfig::defaults(Algo::GanDdqn), 3, 36, 27, 5)?;
    let params = agent.params();
    checkpoint::save(&params, &path)?;
    let loaded = checkpoint::load(&path)?;
    let same_bits = params
        .tensors
        .iter()
        .zip(&loaded.tensors)
        .all(|((na, a), (nb, b))| na == nb && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    println!("{} tensors, {} values, bit-identical: {same_bits}", loaded.len(), loaded.n_values());

    let mut restored = Agent::new(AgentConfig::defaults(Algo::GanDdqn), 3, 36, 27, 99)?;
    restored.load_params(&loaded)?;
    let taus: Vec<f64> = (1..=32).map(|k| k as f64 / 33.0).collect();
    let probe = [0.4, 0.7, 0.1];
    let equal = agent.online_q_values(&probe, &taus)? == restored.online_q_values(&probe, &taus)?;
    println!("Q estimates identical after reload: {equal}");

    let mut bytes = std::fs::read(&path)?;
    bytes[0] = b'X';
    std::fs::write(&path, &bytes)?;
    println!("damaged magic: {}", checkpoint::load(&path).unwrap_err());
    bytes.truncate(40);
    std::fs::write(&path, &bytes)?;
    println!("truncated: {}", checkpoint::load(&path).unwrap_err());
    Ok(())
}
