//! Block-by-block evaluation: within a block the masked scores are formed
//! explicitly, everything before the block arrives through the `r×d` carry.
//!
//! Under decay the carry is kept aged to the end of the previous block, so row
//! `t` of the current block (0-based) reads it with weight `γ^(t+1)` and the
//! update is `U ← γ^L·U + Σ_t γ^(L-1-t) c_tᵀ v_t`.

use super::linalg::{gemm_acc, gemm_nt, gemm_tn_acc, scale, OpCount};
use super::Head;
use crate::mask::{decay_powers, power};
use crate::scalar::Scalar;

/// Zeroes the strict upper triangle of `scores` (`l×l`) and scales entry
/// `(t, u)` by `γ^(t-u)`.
fn mask_block<S: Scalar>(scores: &mut [S], l: usize, gamma: Option<S>) {
    if S::COUNT_ONLY {
        return;
    }
    for t in 0..l {
        let row = &mut scores[t * l..(t + 1) * l];
        if let Some(g) = gamma {
            let mut w = S::one();
            for x in row[..t].iter_mut().rev() {
                w = w * g;
                *x = *x * w;
            }
        }
        for x in &mut row[t + 1..] {
            *x = S::zero();
        }
    }
}

pub(super) fn run<S: Scalar>(head: &Head<'_, S>, block: usize, out: &mut [S], ops: &mut OpCount) {
    let (n, r, d) = (head.n, head.r, head.d);
    let block = block.min(n);
    let mut state = vec![S::zero(); r * d];
    let mut scores = vec![S::zero(); block * block];
    let mut read_w = vec![S::zero(); block];
    let mut write_w = vec![S::zero(); block];

    let mut start = 0;
    while start < n {
        let l = block.min(n - start);
        let blk = head.rows(start, start + l);
        let o = &mut out[start * d..(start + l) * d];
        let scores = &mut scores[..l * l];

        gemm_nt(scores, blk.b, blk.c, l, r, l, ops);
        mask_block(scores, l, head.gamma);
        gemm_acc(o, scores, blk.v, l, l, d, None, ops);

        match head.gamma {
            None => {
                gemm_acc(o, blk.b, &state, l, r, d, None, ops);
                gemm_tn_acc(&mut state, blk.c, blk.v, l, r, d, None, ops);
            }
            Some(g) => {
                let read_w = &mut read_w[..l];
                decay_powers(g, 1, read_w);
                gemm_acc(o, blk.b, &state, l, r, d, Some(read_w), ops);

                let write_w = &mut write_w[..l];
                decay_powers(g, 0, write_w);
                write_w.reverse();
                scale(&mut state, power(g, l));
                gemm_tn_acc(&mut state, blk.c, blk.v, l, r, d, Some(write_w), ops);
            }
        }
        start += l;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_block_matches_dense_mask() {
        let mut s = vec![1.0; 9];
        mask_block(&mut s, 3, Some(0.5));
        assert_eq!(s, vec![1.0, 0.0, 0.0, 0.5, 1.0, 0.0, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn opcount_per_block() {
        // n = 10, block 4 -> blocks of 4, 4, 2
        let b = vec![0.0; 10 * 2];
        let v = vec![0.0; 10 * 3];
        let head = Head {
            b: &b,
            c: &b,
            v: &v,
            n: 10,
            r: 2,
            d: 3,
            gamma: None,
        };
        let mut ops = OpCount::new();
        run(&head, 4, &mut vec![0.0; 30], &mut ops);
        let per = |l: usize| l * l * 2 + l * l * 3 + 2 * l * 2 * 3;
        assert_eq!(ops.get() as usize, per(4) * 2 + per(2));
    }
}
