//! Direct evaluation: form `B·Cᵀ`, mask it, multiply by `V`. Quadratic in time
//! and memory.

use super::linalg::{gemm_acc, gemm_nt, hadamard, scratch, OpCount};
use super::{BlockParams, Head};
use crate::error::Result;
use crate::mask::fill_mask;
use crate::oracle::{check_cap, quadratic_bytes};
use crate::scalar::Scalar;

pub(super) fn run<S: Scalar>(
    head: &Head<'_, S>,
    params: &BlockParams,
    out: &mut [S],
    ops: &mut OpCount,
) -> Result<()> {
    let (n, r, d) = (head.n, head.r, head.d);
    // scores and mask, both n×n
    check_cap(
        "vanilla N×N buffers",
        quadratic_bytes(n, std::mem::size_of::<S>(), 2),
        params.mem_cap_bytes,
    )?;
    let mut scores = scratch::<S>(n * n);
    let mut mask = scratch::<S>(n * n);
    gemm_nt(&mut scores, head.b, head.c, n, r, n, ops);
    fill_mask(&mut mask, n, head.gamma);
    hadamard(&mut scores, &mask);
    gemm_acc(out, &scores, head.v, n, n, d, None, ops);
    Ok(())
}
