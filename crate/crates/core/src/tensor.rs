//! Dense row-major tensors in `f64` or `f32`.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DType {
    F64,
    F32,
}

impl DType {
    pub fn width(self) -> usize {
        match self {
            DType::F64 => 8,
            DType::F32 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::F64 => "f64",
            DType::F32 => "f32",
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f64" => Ok(DType::F64),
            "f32" => Ok(DType::F32),
            other => Err(Error::Usage(format!(
                "unknown dtype `{other}` (expected f32 or f64)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    F64(Vec<f64>),
    F32(Vec<f32>),
}

/// Immutable dense tensor. Every extent is at least 1 and all values are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Storage,
}

fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::InvalidShape(
            "tensor needs at least one dimension".into(),
        ));
    }
    if let Some(axis) = dims.iter().position(|&e| e == 0) {
        return Err(Error::InvalidShape(format!(
            "extent of axis {axis} is 0 in {dims:?}"
        )));
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))
        .ok_or_else(|| Error::InvalidShape(format!("element count of {dims:?} overflows")))?;
    if count != len {
        return Err(Error::InvalidShape(format!(
            "dims {dims:?} hold {count} elements but buffer has {len}"
        )));
    }
    Ok(())
}

fn check_finite<T: Copy + Into<f64>>(data: &[T]) -> Result<()> {
    match data.iter().position(|&x| !x.into().is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: data[index].into(),
        }),
        None => Ok(()),
    }
}

impl Tensor {
    pub fn from_f64(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        check_dims(dims, data.len())?;
        check_finite(&data)?;
        Ok(Tensor {
            dims: dims.to_vec(),
            data: Storage::F64(data),
        })
    }

    pub fn from_f32(dims: &[usize], data: Vec<f32>) -> Result<Self> {
        check_dims(dims, data.len())?;
        check_finite(&data)?;
        Ok(Tensor {
            dims: dims.to_vec(),
            data: Storage::F32(data),
        })
    }

    /// Builds a 2-D `f64` tensor from nested rows.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidShape("ragged rows".into()));
        }
        Tensor::from_f64(
            &[n, d],
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
    }

    pub fn zeros(dims: &[usize], dtype: DType) -> Result<Self> {
        let len = dims.iter().product();
        check_dims(dims, len)?;
        let data = match dtype {
            DType::F64 => Storage::F64(vec![0.0; len]),
            DType::F32 => Storage::F32(vec![0.0; len]),
        };
        Ok(Tensor {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dtype(&self) -> DType {
        match self.data {
            Storage::F64(_) => DType::F64,
            Storage::F32(_) => DType::F32,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            Storage::F64(v) => v.len(),
            Storage::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match &self.data {
            Storage::F64(v) => Some(v),
            Storage::F32(_) => None,
        }
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.data {
            Storage::F32(v) => Some(v),
            Storage::F64(_) => None,
        }
    }

    /// Values widened to `f64`, in row-major order.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.data {
            Storage::F64(v) => v.clone(),
            Storage::F32(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }

    pub fn cast(&self, dtype: DType) -> Tensor {
        let data = match (&self.data, dtype) {
            (Storage::F64(v), DType::F32) => Storage::F32(v.iter().map(|&x| x as f32).collect()),
            (Storage::F32(v), DType::F64) => Storage::F64(v.iter().map(|&x| x as f64).collect()),
            (s, _) => s.clone(),
        };
        Tensor {
            dims: self.dims.clone(),
            data,
        }
    }

    pub fn reshape(self, dims: &[usize]) -> Result<Tensor> {
        check_dims(dims, self.len())?;
        Ok(Tensor {
            dims: dims.to_vec(),
            data: self.data,
        })
    }

    /// Bitwise equality of dims, dtype and every scalar.
    pub fn bitwise_eq(&self, other: &Tensor) -> bool {
        if self.dims != other.dims {
            return false;
        }
        match (&self.data, &other.data) {
            (Storage::F64(a), Storage::F64(b)) => {
                a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (Storage::F32(a), Storage::F32(b)) => {
                a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }

    /// `max |self - reference| / max |reference|` over all entries, computed in `f64`.
    /// Falls back to the absolute error when the reference is identically zero.
    pub fn max_rel_error(&self, reference: &Tensor) -> Result<f64> {
        if self.dims != reference.dims {
            return Err(Error::InvalidShape(format!(
                "cannot compare {:?} against {:?}",
                self.dims, reference.dims
            )));
        }
        let a = self.to_f64_vec();
        let b = reference.to_f64_vec();
        let diff = a
            .iter()
            .zip(&b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let scale = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }
}

/// Bridge between concrete tensor storage and the generic kernels.
pub(crate) trait Element: Scalar {
    fn slice(t: &Tensor) -> Option<&[Self]>;
    fn wrap(dims: &[usize], data: Vec<Self>) -> Tensor;
}

impl Element for f64 {
    fn slice(t: &Tensor) -> Option<&[f64]> {
        t.as_f64()
    }
    fn wrap(dims: &[usize], data: Vec<f64>) -> Tensor {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Tensor {
            dims: dims.to_vec(),
            data: Storage::F64(data),
        }
    }
}

impl Element for f32 {
    fn slice(t: &Tensor) -> Option<&[f32]> {
        t.as_f32()
    }
    fn wrap(dims: &[usize], data: Vec<f32>) -> Tensor {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Tensor {
            dims: dims.to_vec(),
            data: Storage::F32(data),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_extent() {
        assert!(matches!(
            Tensor::from_f64(&[2, 0], vec![]),
            Err(Error::InvalidShape(_))
        ));
        assert!(matches!(
            Tensor::zeros(&[0], DType::F32),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(matches!(
            Tensor::from_f64(&[2, 2], vec![1.0; 3]),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn non_finite_reports_flat_index() {
        let err = Tensor::from_f32(&[2, 2], vec![0.0, 1.0, f32::NAN, 2.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 2, .. }));
        let err = Tensor::from_f64(&[3], vec![0.0, f64::INFINITY, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
    }

    #[test]
    fn rel_error_is_scaled_by_reference_max() {
        let a = Tensor::from_f64(&[2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::from_f64(&[2], vec![1.0, 4.0]).unwrap();
        assert_eq!(a.max_rel_error(&b).unwrap(), 0.5);
    }

    #[test]
    fn cast_round_trip_through_f64_is_exact_for_f32() {
        let t = Tensor::from_f32(&[3], vec![0.1, -2.5, 3.0e-7]).unwrap();
        assert!(t.cast(DType::F64).cast(DType::F32).bitwise_eq(&t));
    }
}
