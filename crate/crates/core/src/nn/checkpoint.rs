//! Binary parameter files.
//!
//! Layout, all integers little-endian:
//! `"GDDQ"`, format `u32`, param version `u64`, tensor count `u64`, then per
//! tensor: name length `u64`, UTF-8 name, rank `u64`, dims `u64 × rank`,
//! values as `f64`.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::params::ParamSet;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GDDQ";
pub const FORMAT_VERSION: u32 = 1;

pub fn to_bytes(params: &ParamSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + params.n_values() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&params.version.to_le_bytes());
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for (name, t) in &params.tensors {
        out.extend_from_slice(&(name.len() as u64).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&2u64.to_le_bytes());
        out.extend_from_slice(&(t.nrows() as u64).to_le_bytes());
        out.extend_from_slice(&(t.ncols() as u64).to_le_bytes());
        for v in t.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        let Some(end) = end else {
            return Err(Error::Checkpoint(format!("truncated at byte {} (wanted {n} more)", self.pos)));
        };
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        let v = self.u64()?;
        // anything longer than the remaining file is corrupt
        if v > self.buf.len() as u64 {
            return Err(Error::Checkpoint(format!("implausible length {v}")));
        }
        Ok(v as usize)
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<ParamSet> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4).map_err(|_| Error::Checkpoint("missing magic".into()))? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let format = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if format != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {format}")));
    }
    let version = r.u64()?;
    let count = r.len()?;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.len()?;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = r.len()?;
        if rank != 2 {
            return Err(Error::Checkpoint(format!("tensor {name} has rank {rank}, expected 2")));
        }
        let (rows, cols) = (r.len()?, r.len()?);
        let n = rows.checked_mul(cols).ok_or_else(|| Error::Checkpoint("dims overflow".into()))?;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("dims overflow".into()))?)?;
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let t = Array2::from_shape_vec((rows, cols), values).expect("length checked");
        tensors.push((name, t));
    }
    if r.pos != buf.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(ParamSet { tensors, version })
}

pub fn save(params: &ParamSet, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(params))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ParamSet> {
    from_bytes(&fs::read(path)?)
}
