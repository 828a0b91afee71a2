//! Brute-force reference: materialize `A = B·Cᵀ` and `M`, form `(A ⊙ M)·V` in `f64`.
//!
//! Quadratic in memory and time; this is the error reference for every kernel.

use crate::error::{Error, Result};
use crate::inputs::{validate_inputs, AttnInputs};
use crate::mask::{fill_mask, MaskKind};
use crate::tensor::Tensor;

/// Default byte cap for paths that hold `N×N` buffers: 2 GiB.
pub const DEFAULT_MEM_CAP: u64 = 2 * 1024 * 1024 * 1024;

/// Bytes needed for `count` dense `n×n` buffers of `width`-byte scalars.
pub(crate) fn quadratic_bytes(n: usize, width: usize, count: usize) -> u128 {
    (n as u128) * (n as u128) * (width as u128) * (count as u128)
}

pub(crate) fn check_cap(what: &str, needed: u128, cap: u64) -> Result<()> {
    if needed > cap as u128 {
        return Err(Error::Resource {
            what: what.to_string(),
            needed,
            cap,
            hint: String::new(),
        });
    }
    Ok(())
}

/// Oracle result in the input dtype, under the default memory cap.
pub fn oracle_attn(inputs: &AttnInputs) -> Result<Tensor> {
    oracle_attn_with_cap(inputs, DEFAULT_MEM_CAP)
}

pub fn oracle_attn_with_cap(inputs: &AttnInputs, cap: u64) -> Result<Tensor> {
    let out = oracle_attn_f64(inputs, cap)?;
    Ok(out.cast(inputs.dtype()))
}

/// Oracle result kept in `f64` regardless of the input dtype.
pub fn oracle_attn_f64(inputs: &AttnInputs, cap: u64) -> Result<Tensor> {
    validate_inputs(inputs)?;
    let shape = inputs.shape();
    let (n, r, d) = (shape.seqlen, shape.rank, shape.dim);
    // scores and mask
    check_cap("oracle N×N buffers", quadratic_bytes(n, 8, 2), cap)?;

    let b = inputs.b.to_f64_vec();
    let c = inputs.c.to_f64_vec();
    let v = inputs.v.to_f64_vec();
    let mut out = vec![0.0f64; shape.slices() * n * d];
    let mut scores = vec![0.0f64; n * n];
    let mut mask = vec![0.0f64; n * n];

    for slice in 0..shape.slices() {
        let head = slice % shape.heads;
        let bs = &b[slice * n * r..(slice + 1) * n * r];
        let cs = &c[slice * n * r..(slice + 1) * n * r];
        let vs = &v[slice * n * d..(slice + 1) * n * d];
        let os = &mut out[slice * n * d..(slice + 1) * n * d];

        let gamma = match inputs.mask {
            MaskKind::BinaryCausal => None,
            MaskKind::ExpDecay => Some(inputs.gamma[head]),
        };
        fill_mask(&mut mask, n, gamma);

        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..r {
                    acc += bs[i * r + k] * cs[j * r + k];
                }
                scores[i * n + j] = acc * mask[i * n + j];
            }
        }
        for i in 0..n {
            for j in 0..n {
                let s = scores[i * n + j];
                for k in 0..d {
                    os[i * d + k] += s * vs[j * d + k];
                }
            }
        }
    }
    Tensor::from_f64(&shape.v_dims(), out)
}
