//! Prefix-sum recurrence over rows: `U ← γ·U + c_iᵀ v_i`, `o_i = b_i·U`.
//!
//! With the binary mask `γ = 1` and this is the plain causal dot product.

use super::linalg::{gemm_acc, gemm_tn_acc, scale, OpCount};
use super::Head;
use crate::scalar::Scalar;

pub(super) fn run<S: Scalar>(head: &Head<'_, S>, out: &mut [S], ops: &mut OpCount) {
    carry(head, out, ops);
}

/// Runs the recurrence and returns the final `r×d` state.
fn carry<S: Scalar>(head: &Head<'_, S>, out: &mut [S], ops: &mut OpCount) -> Vec<S> {
    let (r, d) = (head.r, head.d);
    let mut state = vec![S::zero(); r * d];
    for i in 0..head.n {
        if let Some(g) = head.gamma {
            scale(&mut state, g);
        }
        let (bi, ci) = (&head.b[i * r..(i + 1) * r], &head.c[i * r..(i + 1) * r]);
        let vi = &head.v[i * d..(i + 1) * d];
        gemm_tn_acc(&mut state, ci, vi, 1, r, d, None, ops);
        gemm_acc(&mut out[i * d..(i + 1) * d], bi, &state, 1, r, d, None, ops);
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: [f64; 2] = [2.0, 3.0];
    const C: [f64; 2] = [1.0, 4.0];
    const V: [f64; 2] = [5.0, 6.0];

    fn prefix(n: usize, gamma: Option<f64>) -> (Vec<f64>, Vec<f64>) {
        let head = Head {
            b: &B[..n],
            c: &C[..n],
            v: &V[..n],
            n,
            r: 1,
            d: 1,
            gamma,
        };
        let mut out = vec![0.0; n];
        let state = carry(&head, &mut out, &mut OpCount::new());
        (out, state)
    }

    #[test]
    fn two_row_binary_trace() {
        let (out, state) = prefix(1, None);
        assert_eq!((out, state), (vec![10.0], vec![5.0]));
        let (out, state) = prefix(2, None);
        assert_eq!((out, state), (vec![10.0, 87.0], vec![29.0]));
    }

    #[test]
    fn two_row_decay_trace() {
        let (out, state) = prefix(2, Some(0.5));
        assert_eq!(out, vec![10.0, 79.5]);
        assert_eq!(state, vec![26.5]);
    }

    #[test]
    fn opcount_is_two_r_d_per_row() {
        let b = vec![0.0; 10 * 3];
        let v = vec![0.0; 10 * 4];
        let head = Head {
            b: &b,
            c: &b,
            v: &v,
            n: 10,
            r: 3,
            d: 4,
            gamma: Some(0.9),
        };
        let mut ops = OpCount::new();
        run(&head, &mut vec![0.0; 40], &mut ops);
        assert_eq!(ops.get(), 2 * 10 * 3 * 4);
    }
}
