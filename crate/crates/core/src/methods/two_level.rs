//! Intra/inter split in the style of lightning attention: each block's output
//! is the sum of a masked quadratic intra-block term and an inter-block term
//! read from the carried state. Decay tables for a block length are built once
//! and reused for every block of that length.

use super::linalg::{gemm_acc, gemm_nt, gemm_tn_acc, hadamard, scale, OpCount};
use super::Head;
use crate::mask::{decay_powers, fill_mask, power};
use crate::scalar::Scalar;

/// Per-block-length decay tables.
struct Tables<S> {
    len: usize,
    /// `l×l` local mask.
    mask: Vec<S>,
    /// `γ^(t+1)` applied to queries reading the carry.
    query: Vec<S>,
    /// `γ^(l-1-t)` applied to keys entering the carry.
    key: Vec<S>,
    /// `γ^l`
    block: S,
}

impl<S: Scalar> Tables<S> {
    fn new(len: usize, gamma: Option<S>) -> Self {
        let mut mask = vec![S::zero(); len * len];
        fill_mask(&mut mask, len, gamma);
        let g = gamma.unwrap_or(S::one());
        let mut query = vec![S::zero(); len];
        decay_powers(g, 1, &mut query);
        let mut key = vec![S::zero(); len];
        decay_powers(g, 0, &mut key);
        key.reverse();
        Tables {
            len,
            mask,
            query,
            key,
            block: power(g, len),
        }
    }
}

pub(super) fn run<S: Scalar>(head: &Head<'_, S>, block: usize, out: &mut [S], ops: &mut OpCount) {
    let (n, r, d) = (head.n, head.r, head.d);
    let block = block.min(n);
    let decayed = head.gamma.is_some();
    let mut tables = Tables::new(block, head.gamma);
    let mut state = vec![S::zero(); r * d];
    let mut scores = vec![S::zero(); block * block];
    let mut intra = vec![S::zero(); block * d];
    let mut inter = vec![S::zero(); block * d];

    let mut start = 0;
    while start < n {
        let l = block.min(n - start);
        if l != tables.len {
            tables = Tables::new(l, head.gamma);
        }
        let blk = head.rows(start, start + l);
        let scores = &mut scores[..l * l];
        let intra = &mut intra[..l * d];
        let inter = &mut inter[..l * d];
        intra.fill(S::zero());
        inter.fill(S::zero());

        gemm_nt(scores, blk.b, blk.c, l, r, l, ops);
        hadamard(scores, &tables.mask);
        gemm_acc(intra, scores, blk.v, l, l, d, None, ops);

        let query = decayed.then_some(&tables.query[..]);
        gemm_acc(inter, blk.b, &state, l, r, d, query, ops);

        if !S::COUNT_ONLY {
            for ((o, &a), &e) in out[start * d..(start + l) * d]
                .iter_mut()
                .zip(intra.iter())
                .zip(inter.iter())
            {
                *o = a + e;
            }
        }

        if decayed {
            scale(&mut state, tables.block);
        }
        let key = decayed.then_some(&tables.key[..]);
        gemm_tn_acc(&mut state, blk.c, blk.v, l, r, d, key, ops);
        start += l;
    }
}
