//! Binary interchange for dense matrices and state vectors.
//!
//! Layout: magic `EGSC`, u32 version (currently 1), u32 N, then the payload
//! as little-endian float64 pairs (re, im). A matrix stores 2*N*N floats in
//! column-major order; a state vector is an N x 1 matrix, so 2*N floats.

use crate::error::{Error, Result};
use crate::hilbert::StateVector;
use crate::linalg::{CMatrix, C64};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: [u8; 4] = *b"EGSC";
const VERSION: u32 = 1;

fn write_payload(path: &Path, n: u32, values: &[C64]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(&MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&n.to_le_bytes()).map_err(io_err)?;
    for v in values {
        w.write_all(&v.re.to_le_bytes()).map_err(io_err)?;
        w.write_all(&v.im.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads the header and payload; `expected_len(n)` maps the header's N to
/// the number of complex entries the caller requires.
fn read_payload(path: &Path, expected_len: impl Fn(usize) -> usize) -> Result<(usize, Vec<C64>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let io_err = |e| Error::io(path, e);

    let mut magic = [0_u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            path: path.display().to_string(),
            got: magic,
        });
    }
    let mut buf4 = [0_u8; 4];
    r.read_exact(&mut buf4).map_err(io_err)?;
    let version = u32::from_le_bytes(buf4);
    if version != VERSION {
        return Err(Error::BadVersion {
            path: path.display().to_string(),
            got: version,
            expected: VERSION,
        });
    }
    r.read_exact(&mut buf4).map_err(io_err)?;
    let n = u32::from_le_bytes(buf4) as usize;

    let want = expected_len(n);
    let mut raw = Vec::new();
    r.read_to_end(&mut raw).map_err(io_err)?;
    let floats = raw.len() / 8;
    if raw.len() % 8 != 0 || floats != 2 * want {
        return Err(Error::BadPayload {
            path: path.display().to_string(),
            expected: 2 * want,
            got: floats,
        });
    }
    let mut values = Vec::with_capacity(want);
    for i in 0..want {
        let re = f64::from_le_bytes(raw[16 * i..16 * i + 8].try_into().unwrap());
        let im = f64::from_le_bytes(raw[16 * i + 8..16 * i + 16].try_into().unwrap());
        values.push(C64::new(re, im));
    }
    Ok((n, values))
}

pub fn write_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    assert!(m.is_square(), "interchange format stores square matrices");
    write_payload(path, m.rows() as u32, m.data())
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let (n, values) = read_payload(path, |n| n * n)?;
    let mut m = CMatrix::zeros(n, n);
    m.data_mut().copy_from_slice(&values);
    Ok(m)
}

pub fn write_vector(path: &Path, v: &StateVector) -> Result<()> {
    write_payload(path, v.dim() as u32, v.amps())
}

pub fn read_vector(path: &Path) -> Result<StateVector> {
    let (_, values) = read_payload(path, |n| n)?;
    Ok(StateVector::new(values))
}
