//! The discrete bandwidth-split action table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One bandwidth split. `units[n] * resolution_hz` is the bandwidth of slice `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub index: usize,
    pub units: Vec<u64>,
    pub resolution_hz: u64,
}

impl Action {
    pub fn allocation_hz(&self) -> Vec<u64> {
        self.units.iter().map(|u| u * self.resolution_hz).collect()
    }

    pub fn total_hz(&self) -> u64 {
        self.units.iter().sum::<u64>() * self.resolution_hz
    }
}

fn units_of(total_hz: u64, resolution_hz: u64) -> Result<u64> {
    if resolution_hz == 0 {
        return Err(Error::config("resolution must be positive"));
    }
    if total_hz % resolution_hz != 0 {
        return Err(Error::config(format!(
            "total bandwidth {total_hz} Hz is not divisible by resolution {resolution_hz} Hz"
        )));
    }
    Ok(total_hz / resolution_hz)
}

/// All splits of `total_hz` into `n_slices` strictly positive multiples of
/// `resolution_hz`, in lexicographic order of the unit vectors.
pub fn enumerate_actions(total_hz: u64, resolution_hz: u64, n_slices: usize) -> Result<Vec<Action>> {
    let units = units_of(total_hz, resolution_hz)?;
    if n_slices == 0 {
        return Err(Error::config("need at least one slice"));
    }
    if units < n_slices as u64 {
        return Err(Error::config(format!(
            "{units} bandwidth units cannot give each of {n_slices} slices a positive share"
        )));
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(n_slices);
    compositions(units, n_slices, &mut prefix, &mut |parts| {
        out.push(Action { index: out.len(), units: parts.to_vec(), resolution_hz });
    });
    Ok(out)
}

fn compositions(remaining: u64, parts_left: usize, prefix: &mut Vec<u64>, emit: &mut impl FnMut(&[u64])) {
    if parts_left == 1 {
        prefix.push(remaining);
        emit(prefix);
        prefix.pop();
        return;
    }
    // leave at least one unit for each later part
    for first in 1..=remaining - (parts_left as u64 - 1) {
        prefix.push(first);
        compositions(remaining - first, parts_left - 1, prefix, emit);
        prefix.pop();
    }
}

/// Near-equal split: `units / n` each, with the remainder handed out one unit
/// at a time starting from the first slice.
pub fn near_equal_split(units: u64, n_slices: usize) -> Vec<u64> {
    let n = n_slices as u64;
    let (base, extra) = (units / n, units % n);
    (0..n).map(|i| base + u64::from(i < extra)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_composition() {
        let a = enumerate_actions(3, 1, 3).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].units, vec![1, 1, 1]);
    }

    #[test]
    fn lexicographic_order_and_invariants() {
        let a = enumerate_actions(10_000_000, 1_000_000, 3).unwrap();
        assert_eq!(a[0].units, vec![1, 1, 8]);
        assert_eq!(a[1].units, vec![1, 2, 7]);
        assert_eq!(a.last().unwrap().units, vec![8, 1, 1]);
        for (i, w) in a.windows(2).enumerate() {
            assert!(w[0].units < w[1].units);
            assert_eq!(w[0].index, i);
        }
        for act in &a {
            assert_eq!(act.total_hz(), 10_000_000);
            assert!(act.allocation_hz().iter().all(|&hz| hz >= 1_000_000 && hz % 1_000_000 == 0));
        }
    }

    #[test]
    fn errors() {
        assert!(enumerate_actions(10_000_000, 3_000_000, 3).is_err());
        assert!(enumerate_actions(2, 1, 3).is_err());
        assert!(enumerate_actions(10, 0, 3).is_err());
        assert!(enumerate_actions(10, 1, 0).is_err());
    }

    #[test]
    fn near_equal() {
        assert_eq!(near_equal_split(9, 3), vec![3, 3, 3]);
        assert_eq!(near_equal_split(10, 3), vec![4, 3, 3]);
        assert_eq!(near_equal_split(50, 3), vec![17, 17, 16]);
    }
}
