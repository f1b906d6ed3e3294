//! Binary instance container.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic    8 bytes  "PDSGINST"
//! version  1 byte   (currently 1)
//! n, p, N, m        u64 each
//! H_1..H_N          N * p * n f64, each block row-major p x n
//! c_1..c_N          N * p f64
//! Q_1..Q_m          m * n * n f64, row-major
//! a_1..a_m          m * n f64
//! b                 m f64
//! box_lo, box_hi    n f64 each
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{BoxDomain, Oracle, QcqpData};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"PDSGINST";
pub const VERSION: u8 = 1;

fn put_f64s(out: &mut Vec<u8>, vals: &[f64]) {
    for v in vals {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serializes an instance into the container layout.
pub fn to_bytes(inst: &QcqpData) -> Vec<u8> {
    let (n, p, big_n, m) = (inst.n(), inst.p(), inst.num_samples(), inst.m());
    let floats = big_n * p * n + big_n * p + m * n * n + m * n + m + 2 * n;
    let mut out = Vec::with_capacity(9 + 32 + 8 * floats);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for d in [n, p, big_n, m] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    put_f64s(&mut out, inst.raw_h());
    put_f64s(&mut out, inst.raw_c());
    put_f64s(&mut out, inst.raw_q());
    put_f64s(&mut out, inst.raw_a());
    put_f64s(&mut out, inst.b());
    put_f64s(&mut out, inst.domain().lo());
    put_f64s(&mut out, inst.domain().hi());
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|e| *e <= self.buf.len()).ok_or_else(|| {
            Error::Format(format!("truncated: need {len} bytes at offset {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let bytes = self.take(count.checked_mul(8).ok_or_else(|| Error::Format("array too large".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

/// Parses the container layout. The generator seed is not stored, so the result has
/// `seed() == None`.
pub fn from_bytes(buf: &[u8]) -> Result<QcqpData> {
    let mut cur = Cursor { buf, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = cur.take(1)?[0];
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = usize::try_from(cur.u64()?).map_err(|_| Error::Format("dimension overflow".into()))?;
    }
    let [n, p, big_n, m] = dims;
    let mul = |a: usize, b: usize| a.checked_mul(b).ok_or_else(|| Error::Format("dimension overflow".into()));
    let h = cur.f64s(mul(mul(big_n, p)?, n)?)?;
    let c = cur.f64s(mul(big_n, p)?)?;
    let q = cur.f64s(mul(mul(m, n)?, n)?)?;
    let a = cur.f64s(mul(m, n)?)?;
    let b = cur.f64s(m)?;
    let lo = cur.f64s(n)?;
    let hi = cur.f64s(n)?;
    if cur.pos != buf.len() {
        return Err(Error::Format(format!("{} trailing bytes", buf.len() - cur.pos)));
    }
    QcqpData::from_parts(n, p, big_n, m, h, c, q, a, b, BoxDomain::new(lo, hi)?, None)
}

pub fn write_instance(path: &Path, inst: &QcqpData) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&to_bytes(inst))?;
    f.flush()?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<QcqpData> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    from_bytes(&buf)
}
