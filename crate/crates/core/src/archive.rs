//! Binary archive of named `f64` tensors with a JSON header.
//!
//! ```text
//! magic "FISPARCH" | u32 LE version | u64 LE header length | header JSON
//! | tensor data, f64 LE, in header order
//! ```
//!
//! The header holds caller metadata plus the name and shape of every
//! tensor. Serialization is deterministic.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"FISPARCH";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: [usize; 4],
}

#[derive(Serialize, Deserialize)]
struct Header<M> {
    meta: M,
    tensors: Vec<Entry>,
}

fn err(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn to_bytes<M: Serialize>(meta: &M, tensors: &[(&str, &Tensor)]) -> Result<Vec<u8>> {
    let header = Header {
        meta,
        tensors: tensors
            .iter()
            .map(|(n, t)| Entry {
                name: n.to_string(),
                shape: t.shape(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| err(e.to_string()))?;
    let body: usize = tensors.iter().map(|(_, t)| t.len() * 8).sum();
    let mut out = Vec::with_capacity(24 + json.len() + body);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, t) in tensors {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn from_bytes<M: DeserializeOwned>(bytes: &[u8]) -> Result<(M, Vec<(String, Tensor)>)> {
    let mut r = bytes;
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| err("truncated archive"))?;
    if &magic != MAGIC {
        return Err(err("not a tensor archive (bad magic)"));
    }
    let mut u32b = [0u8; 4];
    r.read_exact(&mut u32b).map_err(|_| err("truncated archive"))?;
    let version = u32::from_le_bytes(u32b);
    if version != VERSION {
        return Err(err(format!("unsupported archive version {version}")));
    }
    let mut u64b = [0u8; 8];
    r.read_exact(&mut u64b).map_err(|_| err("truncated archive"))?;
    let hlen = usize::try_from(u64::from_le_bytes(u64b)).map_err(|_| err("header too large"))?;
    if hlen > r.len() {
        return Err(err("truncated archive header"));
    }
    let header: Header<M> = serde_json::from_slice(&r[..hlen]).map_err(|e| err(format!("bad header: {e}")))?;
    r = &r[hlen..];
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for entry in header.tensors {
        let n: usize = entry.shape.iter().product();
        if r.len() < n * 8 {
            return Err(err(format!("truncated data for tensor {}", entry.name)));
        }
        let data = r[..n * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        r = &r[n * 8..];
        tensors.push((entry.name, Tensor::from_vec(entry.shape, data)?));
    }
    if !r.is_empty() {
        return Err(err(format!("{} trailing bytes after tensor data", r.len())));
    }
    Ok((header.meta, tensors))
}

pub fn write_file<M: Serialize>(path: &std::path::Path, meta: &M, tensors: &[(&str, &Tensor)]) -> Result<()> {
    let bytes = to_bytes(meta, tensors)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file<M: DeserializeOwned>(path: &std::path::Path) -> Result<(M, Vec<(String, Tensor)>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let a = Tensor::from_fn([1, 2, 3, 1], |[_, c, y, _]| c as f64 - y as f64 * 0.5);
        let b = Tensor::scalar(f64::MIN_POSITIVE);
        let bytes = to_bytes(&"meta", &[("a", &a), ("b", &b)]).unwrap();
        let (meta, ts): (String, _) = from_bytes(&bytes).unwrap();
        assert_eq!(meta, "meta");
        assert_eq!(ts, vec![("a".to_string(), a.clone()), ("b".to_string(), b.clone())]);
        let (_, ts2): (String, _) = from_bytes(&bytes).unwrap();
        let names: Vec<&str> = ts2.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(to_bytes(&"meta", &[(names[0], &ts2[0].1), (names[1], &ts2[1].1)]).unwrap(), bytes);

        assert!(from_bytes::<String>(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(from_bytes::<String>(&bad).is_err());
    }
}
