//! SPB: a little-endian binary matrix container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SPB1"
//! 4       1     dtype tag, 0 = float64
//! 5       4     rows (u32)
//! 9       4     cols (u32)
//! 13      20    reserved, zero
//! 33      8·r·c row-major float64 payload
//! ```

use std::fs;
use std::path::Path;

use spectraforge_core::{Error, Matrix};

use crate::error::{AppError, Result};

pub const MAGIC: &[u8; 4] = b"SPB1";
pub const HEADER_LEN: usize = 33;
const DTYPE_F64: u8 = 0;

pub fn encode(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.push(DTYPE_F64);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 20]);
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses an SPB image; `path` only labels errors.
pub fn decode(bytes: &[u8], path: &Path) -> Result<Matrix> {
    if bytes.len() < HEADER_LEN {
        return Err(AppError::format(path, format!("{} bytes is shorter than the SPB header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(AppError::format(path, "missing SPB1 magic"));
    }
    if bytes[4] != DTYPE_F64 {
        return Err(AppError::format(path, format!("unsupported dtype tag {}", bytes[4])));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (rows, cols) = (u32_at(5), u32_at(9));
    if bytes[13..HEADER_LEN].iter().any(|&b| b != 0) {
        return Err(AppError::format(path, "reserved header bytes are not zero"));
    }
    if rows == 0 || cols == 0 {
        return Err(AppError::format(path, format!("empty {rows}x{cols} matrix")));
    }
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| AppError::format(path, "dimensions overflow"))?;
    if bytes.len() - HEADER_LEN != expected {
        return Err(AppError::format(
            path,
            format!("payload is {} bytes, {rows}x{cols} needs {expected}", bytes.len() - HEADER_LEN),
        ));
    }
    let data: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(format!("{} holds non-finite values", path.display())).into());
    }
    Ok(Matrix::new(rows, cols, data)?)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::Spec("refusing to write an empty matrix".into()).into());
    }
    fs::write(path, encode(m)).map_err(|e| AppError::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let m = Matrix::new(1, 1, vec![0.0]).unwrap();
        let b = encode(&m);
        assert_eq!(b.len(), 41);
        assert_eq!(&b[..5], b"SPB1\0");
        assert_eq!(&b[5..9], &1u32.to_le_bytes());
    }

    #[test]
    fn rejects_corruption() {
        let p = Path::new("x.spb");
        let good = encode(&Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        assert!(decode(&good, p).is_ok());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad, p), Err(AppError::Format { .. })));
        let mut bad = good.clone();
        bad[20] = 1;
        assert!(matches!(decode(&bad, p), Err(AppError::Format { .. })));
        assert!(matches!(decode(&good[..good.len() - 1], p), Err(AppError::Format { .. })));
        let mut nan = good.clone();
        nan[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert_eq!(decode(&nan, p).unwrap_err().class(), "DataError");
    }
}
