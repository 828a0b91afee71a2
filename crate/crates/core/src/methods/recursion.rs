//! Divide and conquer over the sequence. The masked score matrix splits into two
//! half-size masked blocks on the diagonal and one unmasked block below it; the
//! unmasked block is applied as `B₂·(C₁ᵀ·V₁)` in linear time, the diagonal
//! blocks recurse. Sub-problems of at most `threshold` rows go to the row
//! recurrence.
//!
//! Under decay the off-diagonal block becomes
//! `diag(W₁)·B₂·((diag(W₂)·C₁)ᵀ·V₁)` with `W₁ = [1, γ, …, γ^(hi-mid-1)]` over the
//! rows of the lower half and `W₂ = [γ^(mid-lo), …, γ]` over the rows of the
//! upper half, so row `t` of the lower half and row `s` of the upper half meet
//! with weight `γ^(t-s)`.

use super::linalg::{gemm_acc, gemm_tn_acc, OpCount};
use super::{row_based, Head};
use crate::error::{Error, Result};
use crate::mask::decay_powers;
use crate::scalar::Scalar;

const MAX_DEPTH: usize = 64;

pub(super) fn run<S: Scalar>(
    head: &Head<'_, S>,
    threshold: usize,
    out: &mut [S],
    ops: &mut OpCount,
) -> Result<()> {
    let mut cross = vec![S::zero(); head.r * head.d];
    recurse(head, threshold.max(1), 0, head.n, 0, out, &mut cross, ops)
}

#[allow(clippy::too_many_arguments)]
fn recurse<S: Scalar>(
    head: &Head<'_, S>,
    threshold: usize,
    lo: usize,
    hi: usize,
    depth: usize,
    out: &mut [S],
    cross: &mut [S],
    ops: &mut OpCount,
) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::Internal(format!(
            "recursion deeper than {MAX_DEPTH} levels"
        )));
    }
    let d = head.d;
    if hi - lo <= threshold {
        row_based::run(&head.rows(lo, hi), &mut out[lo * d..hi * d], ops);
        return Ok(());
    }
    let mid = (lo + hi) / 2;
    recurse(head, threshold, lo, mid, depth + 1, out, cross, ops)?;
    recurse(head, threshold, mid, hi, depth + 1, out, cross, ops)?;

    let (upper, lower) = (head.rows(lo, mid), head.rows(mid, hi));
    let (r, m1, m2) = (head.r, mid - lo, hi - mid);
    cross.fill(S::zero());
    let o3 = &mut out[mid * d..hi * d];
    match head.gamma {
        None => {
            gemm_tn_acc(cross, upper.c, upper.v, m1, r, d, None, ops);
            gemm_acc(o3, lower.b, cross, m2, r, d, None, ops);
        }
        Some(g) => {
            let mut w2 = vec![S::zero(); m1];
            decay_powers(g, 1, &mut w2);
            w2.reverse();
            let mut w1 = vec![S::zero(); m2];
            decay_powers(g, 0, &mut w1);
            gemm_tn_acc(cross, upper.c, upper.v, m1, r, d, Some(&w2), ops);
            gemm_acc(o3, lower.b, cross, m2, r, d, Some(&w1), ops);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: [f64; 2] = [2.0, 3.0];
    const C: [f64; 2] = [1.0, 4.0];
    const V: [f64; 2] = [5.0, 6.0];

    fn ex(gamma: Option<f64>) -> Head<'static, f64> {
        Head {
            b: &B,
            c: &C,
            v: &V,
            n: 2,
            r: 1,
            d: 1,
            gamma,
        }
    }

    #[test]
    fn two_row_single_split() {
        let mut out = vec![0.0; 2];
        run(&ex(None), 1, &mut out, &mut OpCount::new()).unwrap();
        assert_eq!(out, vec![10.0, 87.0]);
        // base cases alone give [2·1·5, 3·4·6]; the cross term supplies 3·(1·5) = 15
        let mut base = [0.0; 2];
        row_based::run(&ex(None).rows(0, 1), &mut base[..1], &mut OpCount::new());
        row_based::run(&ex(None).rows(1, 2), &mut base[1..], &mut OpCount::new());
        assert_eq!(out[1] - base[1], 15.0);
    }

    #[test]
    fn two_row_decay_split_weights() {
        let mut out = vec![0.0; 2];
        run(&ex(Some(0.5)), 1, &mut out, &mut OpCount::new()).unwrap();
        // W₁ = [γ⁰], W₂ = [γ¹]: cross term 0.5·15 = 7.5
        assert_eq!(out, vec![10.0, 79.5]);
    }

    #[test]
    fn below_threshold_is_row_based() {
        let b = [1.0, -2.0, 0.5, 3.0, 1.5, -1.0];
        let v = [2.0, 1.0, -1.0, 0.25, 4.0, 3.0];
        let head = Head {
            b: &b,
            c: &b,
            v: &v,
            n: 3,
            r: 2,
            d: 2,
            gamma: Some(0.9),
        };
        let mut a = vec![0.0; 6];
        let mut want = vec![0.0; 6];
        run(&head, 8, &mut a, &mut OpCount::new()).unwrap();
        row_based::run(&head, &mut want, &mut OpCount::new());
        assert_eq!(a, want);
    }

    #[test]
    fn opcount_follows_n_log_n() {
        // n = 2^k·T: k levels of cross terms, each costing n·r·d, plus 2·n·r·d at the leaves
        let (t, r, d) = (4, 2, 3);
        for k in 0..6 {
            let n = t << k;
            let b = vec![0.0; n * r];
            let v = vec![0.0; n * d];
            let head = Head {
                b: &b,
                c: &b,
                v: &v,
                n,
                r,
                d,
                gamma: None,
            };
            let mut ops = OpCount::new();
            run(&head, t, &mut vec![0.0; n * d], &mut ops).unwrap();
            assert_eq!(ops.get() as usize, k * n * r * d + 2 * n * r * d);
        }
    }
}
