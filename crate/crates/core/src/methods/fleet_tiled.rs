//! Tiled scan form. `V` is cut into column blocks of width `col_block` and each
//! column block into row blocks of `row_block` rows. Within a tile the scan runs
//! locally; the per-rank carry `l_j` (one row of the column block's width)
//! hands the running sum across row blocks:
//!
//! ```text
//! O_tile += diag(b_j) · (scan(diag(c_j)·V_tile) + w ⊗ l_j)
//! l_j    ← γ^L·l_j + Σ_t γ^(L-1-t)·c_j[t]·V_tile[t]
//! ```
//!
//! with `w[t] = γ^(t+1)` (all ones for the binary mask). The second sum is the
//! last row of the local scan.

use super::linalg::OpCount;
use super::Head;
use crate::mask::{decay_powers, power};
use crate::scalar::Scalar;
use crate::scan::{cumsum_rows_in_place, discounted_cumsum_rows_in_place};

pub(super) fn run<S: Scalar>(
    head: &Head<'_, S>,
    row_block: usize,
    col_block: usize,
    out: &mut [S],
    ops: &mut OpCount,
) {
    let col_block = col_block.min(head.d);
    let mut carry = vec![S::zero(); head.r * col_block];
    let mut c0 = 0;
    while c0 < head.d {
        let w = col_block.min(head.d - c0);
        column_block(head, c0, w, row_block, &mut carry[..head.r * w], out, ops);
        c0 += w;
    }
}

/// Output columns `c0..c0+w` for every row. `carry` (`r×w`) holds the per-rank
/// prefix rows on return.
fn column_block<S: Scalar>(
    head: &Head<'_, S>,
    c0: usize,
    w: usize,
    row_block: usize,
    carry: &mut [S],
    out: &mut [S],
    ops: &mut OpCount,
) {
    let (n, r, d) = (head.n, head.r, head.d);
    let row_block = row_block.min(n);
    let mut tile = vec![S::zero(); row_block * w];
    let mut acc = vec![S::zero(); row_block * w];
    let mut read_w = vec![S::one(); row_block];
    carry.fill(S::zero());

    let mut start = 0;
    while start < n {
        let l = row_block.min(n - start);
        let acc = &mut acc[..l * w];
        let tile = &mut tile[..l * w];
        let read_w = &mut read_w[..l];
        acc.fill(S::zero());
        let age = head.gamma.map(|g| {
            decay_powers(g, 1, read_w);
            power(g, l)
        });

        for j in 0..r {
            for t in 0..l {
                let row = start + t;
                let cj = head.c[row * r + j];
                let src = &head.v[row * d + c0..row * d + c0 + w];
                for (x, &v) in tile[t * w..(t + 1) * w].iter_mut().zip(src) {
                    *x = cj * v;
                }
            }
            match head.gamma {
                None => cumsum_rows_in_place(tile, l, w),
                Some(g) => discounted_cumsum_rows_in_place(tile, l, w, g),
            }
            ops.add(l * w);

            let lj = &mut carry[j * w..(j + 1) * w];
            for t in 0..l {
                let bj = head.b[(start + t) * r + j];
                let wt = read_w[t];
                let dst = &mut acc[t * w..(t + 1) * w];
                let src = &tile[t * w..(t + 1) * w];
                for ((o, &x), &c) in dst.iter_mut().zip(src).zip(lj.iter()) {
                    let prefix = match age {
                        Some(_) => x + wt * c,
                        None => x + c,
                    };
                    *o += bj * prefix;
                }
            }
            ops.add(l * w);

            let last = &tile[(l - 1) * w..l * w];
            for (c, &x) in lj.iter_mut().zip(last) {
                *c = match age {
                    Some(a) => a * *c + x,
                    None => *c + x,
                };
            }
            ops.add(w);
        }
        for t in 0..l {
            let row = start + t;
            out[row * d + c0..row * d + c0 + w].copy_from_slice(&acc[t * w..(t + 1) * w]);
        }
        start += l;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_carry_after_first_row_block() {
        // B = C = ones(3×1), V = [[1,0],[0,1],[2,2]], B_r = 2, column blocks of width 1
        let ones = [1.0; 3];
        let v = [1.0, 0.0, 0.0, 1.0, 2.0, 2.0];
        let head = Head {
            b: &ones,
            c: &ones,
            v: &v,
            n: 3,
            r: 1,
            d: 2,
            gamma: None,
        };
        let first = head.rows(0, 2);
        let mut carry = [0.0; 2];
        let mut out = vec![0.0; 4];
        let mut ops = OpCount::new();
        for c0 in 0..2 {
            column_block(&first, c0, 1, 2, &mut carry[c0..c0 + 1], &mut out, &mut ops);
        }
        assert_eq!(carry, [1.0, 1.0]);

        let mut full = vec![0.0; 6];
        run(&head, 2, 1, &mut full, &mut OpCount::new());
        assert_eq!(full, vec![1.0, 0.0, 1.0, 1.0, 3.0, 3.0]);
    }
}
