//! Binary weights format.
//!
//! ```text
//! "CLIDS" 0x01
//! per tensor, in graph order:
//!     name length  u16 LE
//!     name         UTF-8
//!     rank         u8
//!     dims         u32 LE x rank
//!     values       f32 LE x product(dims)
//! checksum         u64 LE, wrapping sum of every preceding byte
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::config::ModelConfig;
use super::graph::ModelGraph;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 5] = b"CLIDS";
pub const VERSION: u8 = 0x01;

fn byte_sum(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0u64, |acc, &b| acc.wrapping_add(b as u64))
}

/// Encodes `(name, tensor)` pairs. Values are written as `f32`.
pub fn encode<'a, T: Real>(tensors: impl IntoIterator<Item = (&'a str, &'a Tensor<T>)>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for (name, t) in tensors {
        let name_len = u16::try_from(name.len())
            .map_err(|_| Error::MalformedWeights(format!("tensor name too long: {name}")))?;
        let rank = u8::try_from(t.rank())
            .map_err(|_| Error::MalformedWeights(format!("rank {} too large", t.rank())))?;
        out.extend_from_slice(&name_len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(rank);
        for &d in t.shape() {
            let d = u32::try_from(d).map_err(|_| Error::MalformedWeights(format!("dimension {d} too large")))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&(v.to_f64() as f32).to_le_bytes());
        }
    }
    let sum = byte_sum(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::MalformedWeights(format!("truncated at byte {}", self.pos))),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Decodes and verifies a weights blob.
pub fn decode(bytes: &[u8]) -> Result<Vec<(String, Tensor<f32>)>> {
    if bytes.len() < MAGIC.len() + 1 + 8 {
        return Err(Error::MalformedWeights("file too short".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    let actual = byte_sum(body);
    if stored != actual {
        return Err(Error::MalformedWeights(format!(
            "checksum mismatch: stored {stored:#018x}, computed {actual:#018x}"
        )));
    }
    if &body[..MAGIC.len()] != MAGIC {
        return Err(Error::MalformedWeights("bad magic".into()));
    }
    if body[MAGIC.len()] != VERSION {
        return Err(Error::MalformedWeights(format!("unsupported version {}", body[MAGIC.len()])));
    }

    let mut r = Reader { buf: body, pos: MAGIC.len() + 1 };
    let mut out = Vec::new();
    while r.pos < body.len() {
        let name_len = r.u16()? as usize;
        let name = core::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::MalformedWeights("tensor name is not UTF-8".into()))?;
        let rank = r.u8()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let n: usize = shape.iter().product();
        let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::MalformedWeights("size overflow".into()))?)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        let t = Tensor::new(&shape, data).map_err(|e| Error::MalformedWeights(format!("{name}: {e}")))?;
        out.push((String::from(name), t));
    }
    Ok(out)
}

impl<T: Real> ModelGraph<T> {
    /// Serializes every tensor (trainable and running statistics) as `f32`.
    pub fn to_weights_bytes(&self) -> Vec<u8> {
        let named = self.named_tensors();
        encode(named.iter().map(|(n, t, _)| (n.as_str(), *t))).expect("model tensors fit the format")
    }

    pub fn from_weights_bytes(config: &ModelConfig, bytes: &[u8]) -> Result<Self> {
        let tensors = decode(bytes)?.into_iter().map(|(n, t)| (n, t.cast::<T>())).collect();
        Self::load_named(config, tensors)
    }
}
