//! Binary parameter snapshots.
//!
//! Layout (little-endian): magic `AGE1`, u32 version, variant string,
//! u32 metadata count with string pairs, u64 dim, u32 table count, then per
//! table a u16-length name, u64 rows, u64 cols and `rows * cols` f64 values.
//! Strings are a u32 byte length followed by UTF-8 bytes, except table
//! names, which use a u16 length.

use std::path::Path;

use crate::error::{AgeError, Result};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"AGE1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub variant: String,
    pub meta: Vec<(String, String)>,
    pub dim: usize,
    pub tables: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn table(&self, name: &str) -> Result<&Tensor> {
        self.tables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| AgeError::Checkpoint(format!("missing table `{name}`")))
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn expect_dim(&self, expected: usize) -> Result<()> {
        if self.dim != expected {
            return Err(AgeError::DimMismatch {
                expected,
                found: self.dim,
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        put_str(&mut out, &self.variant);
        out.extend_from_slice(&(self.meta.len() as u32).to_le_bytes());
        for (k, v) in &self.meta {
            put_str(&mut out, k);
            put_str(&mut out, v);
        }
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        out.extend_from_slice(&(self.tables.len() as u32).to_le_bytes());
        for (name, t) in &self.tables {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(AgeError::Checkpoint("bad magic, not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(AgeError::Checkpoint(format!(
                "unsupported version {version}, expected {CHECKPOINT_VERSION}"
            )));
        }
        let variant = r.string()?;
        let n_meta = r.u32()? as usize;
        let mut meta = Vec::with_capacity(n_meta.min(1024));
        for _ in 0..n_meta {
            let k = r.string()?;
            let v = r.string()?;
            meta.push((k, v));
        }
        let dim = r.u64()? as usize;
        let n_tables = r.u32()? as usize;
        let mut tables = Vec::with_capacity(n_tables.min(1024));
        for _ in 0..n_tables {
            let len = u16::from_le_bytes(r.take(2)?.try_into().unwrap()) as usize;
            let name = utf8(r.take(len)?)?;
            let rows = r.u64()? as usize;
            let cols = r.u64()? as usize;
            let n = rows
                .checked_mul(cols)
                .filter(|n| n.checked_mul(8).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(truncated)?;
            let raw = r.take(n * 8)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            tables.push((name, Tensor::from_vec(rows, cols, data)));
        }
        if r.remaining() != 0 {
            return Err(AgeError::Checkpoint(format!("{} trailing bytes", r.remaining())));
        }
        Ok(Checkpoint {
            variant,
            meta,
            dim,
            tables,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| AgeError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| AgeError::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Copies every stored table into the matching named tensor.
    pub fn restore_into(&self, targets: Vec<(String, &mut Tensor)>) -> Result<()> {
        for (name, t) in targets {
            let src = self.table(&name)?;
            if src.shape() != t.shape() {
                return Err(AgeError::Checkpoint(format!(
                    "table `{name}` has shape {:?}, model expects {:?}",
                    src.shape(),
                    t.shape()
                )));
            }
            t.data_mut().copy_from_slice(src.data());
        }
        Ok(())
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn truncated() -> AgeError {
    AgeError::Checkpoint("file is truncated".into())
}

fn utf8(b: &[u8]) -> Result<String> {
    String::from_utf8(b.to_vec()).map_err(|_| AgeError::Checkpoint("string is not valid UTF-8".into()))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(truncated());
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        utf8(self.take(n)?)
    }
}
