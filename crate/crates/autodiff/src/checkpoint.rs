//! Binary checkpoint format for parameter stores.
//!
//! Layout, all integers little-endian: 8-byte magic `SATCKPT1`, u32
//! format version, u32 entry count, then per entry a u16 name length,
//! the UTF-8 name, a u8 rank, u32 dimensions, and the values as raw
//! f32 words in row-major order. Entries appear in registration order,
//! so saving the same store twice yields identical bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::params::ParamStore;

const MAGIC: &[u8; 8] = b"SATCKPT1";
const VERSION: u32 = 1;

pub fn save<T: Element, P: AsRef<Path>>(store: &ParamStore<T>, path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(store.len() as u32).to_le_bytes())?;
    for (_, name, tensor) in store.iter() {
        if name.len() > u16::MAX as usize {
            return Err(AutodiffError::Checkpoint(format!(
                "parameter name too long: {name:?}"
            )));
        }
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        let shape = tensor.shape();
        if shape.len() > u8::MAX as usize {
            return Err(AutodiffError::Checkpoint(format!(
                "parameter {name:?} has rank {}",
                shape.len()
            )));
        }
        w.write_all(&[shape.len() as u8])?;
        for &dim in shape {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for &v in tensor.data() {
            w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Load values into an already-constructed store. Every entry must match
/// the store's parameters in order, name, and shape; anything else is a
/// checkpoint error naming the offending entry.
pub fn load<T: Element, P: AsRef<Path>>(store: &mut ParamStore<T>, path: P) -> Result<()> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(AutodiffError::Checkpoint(
            "bad magic, not a checkpoint file".into(),
        ));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(AutodiffError::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let count = read_u32(&mut r, "entry count")? as usize;
    if count != store.len() {
        return Err(AutodiffError::Checkpoint(format!(
            "checkpoint has {count} entries, model expects {}",
            store.len()
        )));
    }
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let name_len = read_u16(&mut r, "name length")? as usize;
        let mut name_buf = vec![0u8; name_len];
        read_exact(&mut r, &mut name_buf, "name")?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| AutodiffError::Checkpoint("name is not UTF-8".into()))?;
        if name != store.name(id) {
            return Err(AutodiffError::Checkpoint(format!(
                "entry {name:?} does not match expected parameter {:?}",
                store.name(id)
            )));
        }
        let mut rank = [0u8; 1];
        read_exact(&mut r, &mut rank, "rank")?;
        let mut shape = Vec::with_capacity(rank[0] as usize);
        for _ in 0..rank[0] {
            shape.push(read_u32(&mut r, "dimension")? as usize);
        }
        if shape != store.tensor(id).shape() {
            return Err(AutodiffError::Checkpoint(format!(
                "entry {name:?} has shape {shape:?}, model expects {:?}",
                store.tensor(id).shape()
            )));
        }
        let n = store.tensor(id).numel();
        let mut bytes = vec![0u8; n * 4];
        read_exact(&mut r, &mut bytes, "values")?;
        let data = store.tensor_mut(id).data_mut();
        for (chunk, slot) in bytes.chunks_exact(4).zip(data.iter_mut()) {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            *slot = T::of_f64(v as f64);
        }
    }
    let mut trailing = [0u8; 1];
    match r.read(&mut trailing)? {
        0 => Ok(()),
        _ => Err(AutodiffError::Checkpoint(
            "trailing bytes after last entry".into(),
        )),
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| AutodiffError::Checkpoint(format!("truncated while reading {what}")))
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u16<R: Read>(r: &mut R, what: &str) -> Result<u16> {
    let mut b = [0u8; 2];
    read_exact(r, &mut b, what)?;
    Ok(u16::from_le_bytes(b))
}
