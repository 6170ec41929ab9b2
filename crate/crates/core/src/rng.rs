//! Named random substreams derived from one master seed.
//!
//! Every consumer of randomness gets its own ChaCha stream so that, for
//! example, changing how often an agent samples minibatches never perturbs
//! the traffic realisation seen by the environment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Placement,
    Shadowing,
    Traffic(usize),
    Fading,
    Exploration,
    Minibatch,
    Quantiles,
    Interpolation,
    Init,
    Warmup,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Placement => 1,
            Stream::Shadowing => 2,
            Stream::Fading => 3,
            Stream::Exploration => 4,
            Stream::Minibatch => 5,
            Stream::Quantiles => 6,
            Stream::Interpolation => 7,
            Stream::Init => 8,
            Stream::Warmup => 9,
            Stream::Traffic(slice) => 100 + slice as u64,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, Stream::Fading), |r, _| Some(r.gen())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, Stream::Fading), |r, _| Some(r.gen())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, Stream::Traffic(0)), |r, _| Some(r.gen())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
