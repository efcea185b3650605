//! Parameter checkpoint format, shared between trainer and CLI.
//!
//! Layout: 8-byte magic `GIPA0001`, then one record per tensor:
//! name length (u32 LE), name bytes (UTF-8), rows (u64 LE), cols (u64 LE),
//! row-major f64 little-endian payload. Record order is the model's
//! parameter visit order, so identical models serialize byte-identically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"GIPA0001";

pub fn write_tensors<S: Scalar>(
    w: &mut impl Write,
    tensors: &[(String, DenseMatrix<S>)],
) -> Result<()> {
    w.write_all(MAGIC)?;
    for (name, t) in tensors {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&(t.rows() as u64).to_le_bytes())?;
        w.write_all(&(t.cols() as u64).to_le_bytes())?;
        for &v in t.data() {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn to_bytes<S: Scalar>(tensors: &[(String, DenseMatrix<S>)]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_tensors(&mut buf, tensors).expect("in-memory write cannot fail");
    buf
}

fn read_exact_or(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Checkpoint(format!("truncated checkpoint while reading {what}")))
}

pub fn read_tensors<S: Scalar>(r: &mut impl Read) -> Result<Vec<(String, DenseMatrix<S>)>> {
    let mut magic = [0u8; 8];
    read_exact_or(r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&magic),
            String::from_utf8_lossy(MAGIC)
        )));
    }
    let mut tensors = Vec::new();
    loop {
        let mut len4 = [0u8; 4];
        match r.read_exact(&mut len4) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let name_len = u32::from_le_bytes(len4) as usize;
        let mut name_bytes = vec![0u8; name_len];
        read_exact_or(r, &mut name_bytes, "tensor name")?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let mut dim = [0u8; 8];
        read_exact_or(r, &mut dim, "rows")?;
        let rows = u64::from_le_bytes(dim) as usize;
        read_exact_or(r, &mut dim, "cols")?;
        let cols = u64::from_le_bytes(dim) as usize;
        let mut data = Vec::with_capacity(rows * cols);
        let mut val = [0u8; 8];
        for _ in 0..rows * cols {
            read_exact_or(r, &mut val, &format!("payload of `{name}`"))?;
            data.push(S::from_f64(f64::from_le_bytes(val)));
        }
        tensors.push((name, DenseMatrix::from_vec(rows, cols, data)?));
    }
    Ok(tensors)
}

pub fn save_file<S: Scalar>(path: &Path, tensors: &[(String, DenseMatrix<S>)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensors(&mut w, tensors)?;
    w.flush()?;
    Ok(())
}

pub fn load_file<S: Scalar>(path: &Path) -> Result<Vec<(String, DenseMatrix<S>)>> {
    let mut r = BufReader::new(File::open(path)?);
    read_tensors(&mut r)
}
