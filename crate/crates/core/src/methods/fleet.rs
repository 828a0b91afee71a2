//! Rank-wise scan form: `O = Σ_j diag(b_j)·scan(diag(c_j)·V)` where `b_j`, `c_j`
//! are the `j`-th columns of `B`, `C` and `scan` is the plain cumulative sum
//! (binary mask) or the `γ`-discounted one.

use super::linalg::OpCount;
use super::Head;
use crate::scalar::Scalar;
use crate::scan::{cumsum_rows_in_place, discounted_cumsum_rows_in_place};

pub(super) fn run<S: Scalar>(head: &Head<'_, S>, out: &mut [S], ops: &mut OpCount) {
    let (n, r, d) = (head.n, head.r, head.d);
    let mut scanned = vec![S::zero(); n * d];
    for j in 0..r {
        for i in 0..n {
            let cij = head.c[i * r + j];
            for (x, &v) in scanned[i * d..(i + 1) * d]
                .iter_mut()
                .zip(&head.v[i * d..(i + 1) * d])
            {
                *x = cij * v;
            }
        }
        match head.gamma {
            None => cumsum_rows_in_place(&mut scanned, n, d),
            Some(g) => discounted_cumsum_rows_in_place(&mut scanned, n, d, g),
        }
        ops.add(n * d);
        for i in 0..n {
            let bij = head.b[i * r + j];
            for (o, &x) in out[i * d..(i + 1) * d]
                .iter_mut()
                .zip(&scanned[i * d..(i + 1) * d])
            {
                *o += bij * x;
            }
        }
        ops.add(n * d);
    }
}
