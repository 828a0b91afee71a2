//! Row scans: plain and discounted cumulative sums down the rows of an `N×d` matrix.
//!
//! Both run strictly index-ascending so that reference and kernel paths
//! reproduce each other exactly.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{DType, Element, Tensor};

/// `buf[i,:] += buf[i-1,:]` for `i = 1..n`.
pub(crate) fn cumsum_rows_in_place<S: Scalar>(buf: &mut [S], n: usize, d: usize) {
    if S::COUNT_ONLY {
        return;
    }
    for i in 1..n {
        let (done, rest) = buf.split_at_mut(i * d);
        let prev = &done[(i - 1) * d..];
        for (x, &p) in rest[..d].iter_mut().zip(prev) {
            *x = p + *x;
        }
    }
}

/// `buf[i,:] = buf[i,:] + lambda * buf[i-1,:]` for `i = 1..n`.
pub(crate) fn discounted_cumsum_rows_in_place<S: Scalar>(
    buf: &mut [S],
    n: usize,
    d: usize,
    lambda: S,
) {
    if S::COUNT_ONLY {
        return;
    }
    for i in 1..n {
        let (done, rest) = buf.split_at_mut(i * d);
        let prev = &done[(i - 1) * d..];
        for (x, &p) in rest[..d].iter_mut().zip(prev) {
            *x += lambda * p;
        }
    }
}

fn rows_cols(m: &Tensor) -> Result<(usize, usize)> {
    match *m.dims() {
        [n, d] => Ok((n, d)),
        ref dims => Err(Error::InvalidShape(format!(
            "expected an N×d matrix, got dims {dims:?}"
        ))),
    }
}

fn scanned<S: Element>(m: &Tensor, f: impl FnOnce(&mut [S], usize, usize)) -> Result<Tensor> {
    let (n, d) = rows_cols(m)?;
    let mut buf = S::slice(m).expect("dtype checked by caller").to_vec();
    f(&mut buf, n, d);
    Ok(S::wrap(&[n, d], buf))
}

/// Running sum down the rows: `out[i,:] = Σ_{j≤i} m[j,:]`.
pub fn cumsum_rows(m: &Tensor) -> Result<Tensor> {
    match m.dtype() {
        DType::F64 => scanned::<f64>(m, cumsum_rows_in_place),
        DType::F32 => scanned::<f32>(m, cumsum_rows_in_place),
    }
}

/// Discounted running sum: `out[0,:] = m[0,:]`, `out[i,:] = m[i,:] + lambda·out[i-1,:]`.
pub fn discounted_cumsum_rows(m: &Tensor, lambda: f64) -> Result<Tensor> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "discount {lambda} outside [0, 1]"
        )));
    }
    match m.dtype() {
        DType::F64 => scanned::<f64>(m, |b, n, d| {
            discounted_cumsum_rows_in_place(b, n, d, lambda)
        }),
        DType::F32 => scanned::<f32>(m, |b, n, d| {
            discounted_cumsum_rows_in_place(b, n, d, lambda as f32)
        }),
    }
}
