//! Self-describing binary checkpoint format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "RNWL" | version u32
//! strings:  count u32, then (key, value) as length-prefixed UTF-8
//! integers: count u32, then key + u64 value
//! lists:    count u32, then key + len u32 + f64 values
//! tensors:  count u32, then key + ndim u32 + dims u32[] + f64 values
//! ```
//!
//! Entries keep their insertion order, so writing the same values twice
//! produces byte-identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::neural::tensor::Tensor;

const MAGIC: &[u8; 4] = b"RNWL";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckpointData {
    pub strings: Vec<(String, String)>,
    pub integers: Vec<(String, u64)>,
    pub lists: Vec<(String, Vec<f64>)>,
    pub tensors: Vec<(String, Tensor)>,
}

impl CheckpointData {
    pub fn get_string(&self, key: &str) -> Result<&str> {
        self.strings
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Checkpoint(format!("missing string entry {key}")))
    }

    pub fn get_integer(&self, key: &str) -> Result<u64> {
        self.integers
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Checkpoint(format!("missing integer entry {key}")))
    }

    pub fn get_list(&self, key: &str) -> Result<&[f64]> {
        self.lists
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Checkpoint(format!("missing list entry {key}")))
    }

    pub fn get_tensor(&self, key: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor entry {key}")))
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Checkpoint(format!("io failure: {e}"))
}

fn write_bytes<W: Write>(w: &mut W, s: &[u8]) -> Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(s).map_err(io_err)
}

fn write_f64s<W: Write>(w: &mut W, vals: &[f64]) -> Result<()> {
    for v in vals {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_checkpoint(path: &Path, data: &CheckpointData) -> Result<()> {
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;

    w.write_all(&(data.strings.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (k, v) in &data.strings {
        write_bytes(&mut w, k.as_bytes())?;
        write_bytes(&mut w, v.as_bytes())?;
    }

    w.write_all(&(data.integers.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (k, v) in &data.integers {
        write_bytes(&mut w, k.as_bytes())?;
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }

    w.write_all(&(data.lists.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (k, v) in &data.lists {
        write_bytes(&mut w, k.as_bytes())?;
        w.write_all(&(v.len() as u32).to_le_bytes()).map_err(io_err)?;
        write_f64s(&mut w, v)?;
    }

    w.write_all(&(data.tensors.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (k, t) in &data.tensors {
        write_bytes(&mut w, k.as_bytes())?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes()).map_err(io_err)?;
        for &d in t.shape() {
            w.write_all(&(d as u32).to_le_bytes()).map_err(io_err)?;
        }
        write_f64s(&mut w, t.data())?;
    }
    w.flush().map_err(io_err)
}

struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.inner.read_exact(&mut b).map_err(io_err)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b).map_err(io_err)?;
        Ok(u64::from_le_bytes(b))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        let mut b = [0u8; 8];
        for _ in 0..n {
            self.inner.read_exact(&mut b).map_err(io_err)?;
            out.push(f64::from_le_bytes(b));
        }
        Ok(out)
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        if len > 1 << 24 {
            return Err(Error::Checkpoint(format!("unreasonable string length {len}")));
        }
        let mut b = vec![0u8; len];
        self.inner.read_exact(&mut b).map_err(io_err)?;
        String::from_utf8(b).map_err(|_| Error::Checkpoint("invalid UTF-8 in entry key".into()))
    }
}

pub fn read_checkpoint(path: &Path) -> Result<CheckpointData> {
    let file = File::open(path).map_err(io_err)?;
    let mut r = Reader { inner: BufReader::new(file) };

    let mut magic = [0u8; 4];
    r.inner.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic, not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version} (expected {VERSION})"
        )));
    }

    let mut data = CheckpointData::default();
    for _ in 0..r.u32()? {
        let k = r.string()?;
        let v = r.string()?;
        data.strings.push((k, v));
    }
    for _ in 0..r.u32()? {
        let k = r.string()?;
        let v = r.u64()?;
        data.integers.push((k, v));
    }
    for _ in 0..r.u32()? {
        let k = r.string()?;
        let n = r.u32()? as usize;
        data.lists.push((k, r.f64s(n)?));
    }
    for _ in 0..r.u32()? {
        let k = r.string()?;
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let len: usize = shape.iter().product();
        let t = Tensor::from_vec(&shape, r.f64s(len)?)?;
        data.tensors.push((k, t));
    }
    Ok(data)
}
