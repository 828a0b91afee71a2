//! `LDT1` tensor files.
//!
//! ```text
//! offset  size      field
//! 0       4         magic "LDT1"
//! 4       1         dtype (0 = f64, 1 = f32)
//! 5       1         ndim
//! 6       8·ndim    extents, u64 little-endian
//! …       len·w     row-major scalars, little-endian
//! ```
//!
//! No padding, no compression, no trailing bytes.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::tensor::{DType, Tensor};

pub const MAGIC: &[u8; 4] = b"LDT1";

fn dtype_byte(dtype: DType) -> u8 {
    match dtype {
        DType::F64 => 0,
        DType::F32 => 1,
    }
}

/// Serializes `t` into the `LDT1` layout.
pub fn encode(t: &Tensor) -> Vec<u8> {
    let width = t.dtype().width();
    let mut buf = Vec::with_capacity(6 + 8 * t.ndim() + t.len() * width);
    buf.extend_from_slice(MAGIC);
    buf.push(dtype_byte(t.dtype()));
    buf.push(t.ndim() as u8);
    for &e in t.dims() {
        buf.extend_from_slice(&(e as u64).to_le_bytes());
    }
    match (t.as_f64(), t.as_f32()) {
        (Some(v), _) => v
            .iter()
            .for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
        (_, Some(v)) => v
            .iter()
            .for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
        _ => unreachable!("tensor has storage"),
    }
    buf
}

/// Parses an `LDT1` buffer. `origin` only labels errors.
pub fn decode(bytes: &[u8], origin: &Path) -> Result<Tensor> {
    let format = |detail: String| Error::Format {
        path: origin.to_path_buf(),
        detail,
    };
    if bytes.len() < 6 {
        return Err(format(format!(
            "header needs 6 bytes, file has {}",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(format(format!(
            "bad magic {:?}, expected \"LDT1\"",
            String::from_utf8_lossy(&bytes[..4])
        )));
    }
    let dtype = match bytes[4] {
        0 => DType::F64,
        1 => DType::F32,
        b => return Err(format(format!("unknown dtype byte {b}"))),
    };
    let ndim = bytes[5] as usize;
    if ndim == 0 {
        return Err(format("ndim is 0".to_string()));
    }
    let header = 6 + 8 * ndim;
    if bytes.len() < header {
        return Err(format(format!(
            "header with {ndim} extents needs {header} bytes, file has {}",
            bytes.len()
        )));
    }
    let mut dims = Vec::with_capacity(ndim);
    for chunk in bytes[6..header].chunks_exact(8) {
        let e = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        let e =
            usize::try_from(e).map_err(|_| format(format!("extent {e} does not fit in memory")))?;
        if e == 0 {
            return Err(format("zero extent".to_string()));
        }
        dims.push(e);
    }
    let count = dims
        .iter()
        .try_fold(1usize, |a, &e| a.checked_mul(e))
        .ok_or_else(|| format(format!("element count of {dims:?} overflows")))?;
    let expected = count
        .checked_mul(dtype.width())
        .ok_or_else(|| format(format!("payload size of {dims:?} overflows")))?;
    let payload = &bytes[header..];
    if payload.len() != expected {
        return Err(format(format!(
            "payload should be {expected} bytes for dims {dims:?} {dtype}, found {}",
            payload.len()
        )));
    }
    match dtype {
        DType::F64 => Tensor::from_f64(
            &dims,
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect(),
        ),
        DType::F32 => Tensor::from_f32(
            &dims,
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
                .collect(),
        ),
    }
}

pub fn write_tensor(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(t)).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    decode(&bytes, &path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn here() -> &'static Path {
        Path::new("<mem>")
    }

    #[test]
    fn one_element_layout() {
        let t = Tensor::from_f64(&[1], vec![1.0]).unwrap();
        let bytes = encode(&t);
        assert_eq!(bytes.len(), 4 + 1 + 1 + 8 + 8);
        assert_eq!(&bytes[..6], b"LDT1\x00\x01");
        assert_eq!(&bytes[6..14], &1u64.to_le_bytes());
        assert_eq!(&bytes[14..], &1.0f64.to_le_bytes());
    }

    #[test]
    fn f32_layout() {
        let t = Tensor::from_f32(&[2, 1], vec![1.5, -2.0]).unwrap();
        let bytes = encode(&t);
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes.len(), 6 + 16 + 8);
        assert!(decode(&bytes, here()).unwrap().bitwise_eq(&t));
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode(&Tensor::from_f64(&[1], vec![1.0]).unwrap());
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode(&bytes, here()), Err(Error::Format { .. })));
    }

    #[test]
    fn bad_dtype_byte() {
        let mut bytes = encode(&Tensor::from_f64(&[1], vec![1.0]).unwrap());
        bytes[4] = 7;
        assert!(matches!(decode(&bytes, here()), Err(Error::Format { .. })));
    }

    #[test]
    fn truncated_payload_names_sizes() {
        let t = Tensor::from_f64(&[16], vec![0.5; 16]).unwrap();
        let bytes = encode(&t);
        let cut = &bytes[..6 + 8 + 8 * 8];
        match decode(cut, here()) {
            Err(Error::Format { detail, .. }) => {
                assert!(detail.contains("128") && detail.contains("64"), "{detail}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = encode(&Tensor::from_f64(&[1], vec![1.0]).unwrap());
        bytes.push(0);
        assert!(matches!(decode(&bytes, here()), Err(Error::Format { .. })));
    }

    #[test]
    fn nan_payload_is_data_error() {
        let mut bytes = encode(&Tensor::from_f32(&[3], vec![1.0, 2.0, 3.0]).unwrap());
        let at = bytes.len() - 4;
        bytes[at..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            decode(&bytes, here()),
            Err(Error::NonFinite { index: 2, .. })
        ));
    }

    #[test]
    fn zero_extent_rejected() {
        let mut bytes = encode(&Tensor::from_f64(&[1], vec![1.0]).unwrap());
        bytes[6..14].copy_from_slice(&0u64.to_le_bytes());
        bytes.truncate(14);
        assert!(matches!(decode(&bytes, here()), Err(Error::Format { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.ldt");
        let t = Tensor::from_f64(&[1, 1, 2, 1], vec![5.0, 6.0]).unwrap();
        write_tensor(&t, &path).unwrap();
        assert!(read_tensor(&path).unwrap().bitwise_eq(&t));
    }

    #[test]
    fn missing_file_is_io_error_with_path() {
        let err = read_tensor("/nonexistent/dir/x.ldt").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/dir/x.ldt"));
    }
}
