//! Binary checkpoint format.
//!
//! ```text
//! "QATCKPT1"                       8 bytes
//! array count                      u64 LE
//! per array:
//!   name length                    u64 LE
//!   name                           UTF-8 bytes
//!   rank                           u64 LE
//!   dims                           rank × u64 LE
//!   values                         prod(dims) × f64 LE, row-major
//! ```
//!
//! Arrays are written in name order. Rank-1 arrays load as `1×n`.

use std::io::{Read, Write};
use std::path::Path;

use super::graph::Mat;
use super::params::ParamSet;
use crate::error::{QatError, Result};

pub const MAGIC: &[u8; 8] = b"QATCKPT1";

pub fn write_checkpoint(params: &ParamSet, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    for (name, a) in params.iter() {
        w.write_all(&(name.len() as u64).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&2u64.to_le_bytes())?;
        w.write_all(&(a.nrows() as u64).to_le_bytes())?;
        w.write_all(&(a.ncols() as u64).to_le_bytes())?;
        for v in a.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| QatError::Checkpoint(format!("truncated: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<ParamSet> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|e| QatError::Checkpoint(format!("truncated header: {e}")))?;
    if &magic != MAGIC {
        return Err(QatError::Checkpoint("bad magic".into()));
    }
    let count = read_u64(r)?;
    let mut params = ParamSet::new();
    for _ in 0..count {
        let len = read_u64(r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)
            .map_err(|e| QatError::Checkpoint(format!("truncated name: {e}")))?;
        let name = String::from_utf8(name).map_err(|_| QatError::Checkpoint("name is not UTF-8".into()))?;
        let rank = read_u64(r)? as usize;
        let dims = (0..rank)
            .map(|_| read_u64(r).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let (rows, cols) = match dims.as_slice() {
            [n] => (1, *n),
            [r, c] => (*r, *c),
            _ => return Err(QatError::Checkpoint(format!("`{name}`: unsupported rank {rank}"))),
        };
        let mut values = vec![0.0; rows * cols];
        for v in values.iter_mut() {
            *v = f64::from_bits(read_u64(r)?);
        }
        let a = Mat::from_shape_vec((rows, cols), values).expect("rows*cols values");
        params.insert(name, a);
    }
    Ok(params)
}

pub fn save(params: &ParamSet, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| QatError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_checkpoint(params, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| QatError::io(path, e))
}

pub fn load(path: &Path) -> Result<ParamSet> {
    let file = std::fs::File::open(path).map_err(|e| QatError::io(path, e))?;
    read_checkpoint(&mut std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn layout_is_pinned() {
        let mut p = ParamSet::new();
        p.insert("ab", array![[1.0, -0.5]]);
        let mut buf = Vec::new();
        write_checkpoint(&p, &mut buf).unwrap();
        let mut expect = b"QATCKPT1".to_vec();
        for v in [1u64, 2] {
            expect.extend(v.to_le_bytes());
        }
        expect.extend(b"ab");
        for v in [2u64, 1, 2] {
            expect.extend(v.to_le_bytes());
        }
        expect.extend(1.0f64.to_le_bytes());
        expect.extend((-0.5f64).to_le_bytes());
        assert_eq!(buf, expect);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_checkpoint(&mut &b"NOTACKPT"[..]).is_err());
        assert!(read_checkpoint(&mut &b"QATCKPT1\x01\x00"[..]).is_err());
    }
}
