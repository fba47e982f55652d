//! The `DTLR` binary container.
//!
//! All integers are little-endian.
//!
//! ```text
//! magic     4 bytes  "DTLR"
//! version   u32      1
//! n_tasks   u32
//!   name_len u16, name (UTF-8)            per task
//! n_samples u64
//!   id u64, task_id u32, rounds u32,      per sample
//!   L u32, d u32, L*d f32 row-major
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dataset::{Dataset, FeatureMatrix, Sample};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"DTLR";
pub const VERSION: u32 = 1;

/// Size of a serialized sample record with an `rows x cols` matrix.
pub fn record_len(rows: usize, cols: usize) -> usize {
    8 + 4 + 4 + 4 + 4 + 4 * rows * cols
}

/// Size of the container header for the given task names.
pub fn header_len<S: AsRef<str>>(tasks: &[S]) -> usize {
    4 + 4 + 4 + tasks.iter().map(|t| 2 + t.as_ref().len()).sum::<usize>() + 8
}

pub fn load_container(path: impl AsRef<Path>) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}

pub fn write_container(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode(dataset)?;
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    file.sync_all()?;
    Ok(())
}

pub fn encode(dataset: &Dataset) -> Result<Vec<u8>> {
    dataset.ensure_valid()?;
    let mut out = Vec::with_capacity(
        header_len(&dataset.tasks)
            + dataset
                .samples
                .iter()
                .map(|s| record_len(s.features.rows(), s.features.cols()))
                .sum::<usize>(),
    );
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&u32_len(dataset.tasks.len(), "task count")?.to_le_bytes());
    for name in &dataset.tasks {
        let len = u16::try_from(name.len())
            .map_err(|_| Error::InvalidDataset(format!("task name too long: {} bytes", name.len())))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    out.extend_from_slice(&(dataset.samples.len() as u64).to_le_bytes());
    for s in &dataset.samples {
        out.extend_from_slice(&s.id.to_le_bytes());
        out.extend_from_slice(&s.task_id.to_le_bytes());
        out.extend_from_slice(&s.rounds.to_le_bytes());
        out.extend_from_slice(&u32_len(s.features.rows(), "token count")?.to_le_bytes());
        out.extend_from_slice(&u32_len(s.features.cols(), "feature dimension")?.to_le_bytes());
        for v in s.features.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn u32_len(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::InvalidDataset(format!("{what} {n} exceeds u32")))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::Truncated(format!(
                    "{what} needs {n} bytes at offset {}, {} remain",
                    self.pos,
                    self.buf.len() - self.pos
                ))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn decode(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = match bytes.get(..4) {
        Some(m) => m.try_into().unwrap(),
        None => {
            let mut m = [0u8; 4];
            m[..bytes.len()].copy_from_slice(bytes);
            return Err(Error::BadMagic(m));
        }
    };
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    r.pos = 4;
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }

    let n_tasks = r.u32("task count")? as usize;
    let mut tasks = Vec::with_capacity(n_tasks.min(r.remaining() / 2));
    for t in 0..n_tasks {
        let len = r.u16("task name length")? as usize;
        let raw = r.take(len, "task name")?;
        let name = std::str::from_utf8(raw).map_err(|e| Error::Corrupt(format!("task {t} name is not UTF-8: {e}")))?;
        tasks.push(name.to_owned());
    }

    let n_samples = r.u64("sample count")?;
    let mut samples = Vec::with_capacity((n_samples as usize).min(r.remaining() / record_len(0, 0)));
    let mut dim: Option<usize> = None;
    for i in 0..n_samples {
        let id = r.u64("sample id")?;
        let task_id = r.u32("task id")?;
        let rounds = r.u32("rounds")?;
        let rows = r.u32("token count")? as usize;
        let cols = r.u32("feature dimension")? as usize;
        match dim {
            None => dim = Some(cols),
            Some(d) if d != cols => {
                return Err(Error::DimensionMismatch(format!(
                    "sample {i} (id {id}) has d={cols}, expected {d}"
                )))
            }
            _ => {}
        }
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Truncated(format!("sample {i} declares {rows}x{cols} floats")))?;
        let payload = r.take(n, "feature payload")?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        samples.push(Sample {
            id,
            task_id,
            rounds,
            features: FeatureMatrix::new(rows, cols, data)?,
        });
    }
    if r.remaining() != 0 {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes after last record",
            r.remaining()
        )));
    }
    Ok(Dataset { tasks, samples })
}
