use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};

/// `(s, a, r, s')` with normalised observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Fixed-capacity ring; the oldest entry is overwritten once full.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay capacity must be positive"));
        }
        Ok(ReplayBuffer { capacity, entries: Vec::with_capacity(capacity), cursor: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Slot the next push will write.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn push(&mut self, t: Transition) {
        if self.entries.len() < self.capacity {
            self.entries.push(t);
        } else {
            self.entries[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.entries[i]
    }

    /// `m` distinct indices.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<Vec<usize>> {
        if m > self.len() {
            return Err(Error::InsufficientData { have: self.len(), need: m });
        }
        Ok(index::sample(rng, self.len(), m).into_vec())
    }

    /// A shuffled partition of every stored index into batches of `m`
    /// (the last one may be shorter).
    pub fn epoch_batches<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(rng);
        order.chunks(m.max(1)).map(<[usize]>::to_vec).collect()
    }
}
