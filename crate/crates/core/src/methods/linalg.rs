//! Small dense products shared by the kernels. Every primitive advances the
//! op meter by its multiply-add count, then returns early for count-only
//! elements. Pure scalings (mask entries, decay weights) are not counted.

use crate::scalar::Scalar;

/// Running count of scalar multiply-adds. Only ever grows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCount(u64);

impl OpCount {
    pub fn new() -> Self {
        OpCount(0)
    }

    #[inline]
    pub fn add(&mut self, n: usize) {
        self.0 += n as u64;
    }

    pub fn get(&self) -> u64 {
        self.0
    }
}

/// Scratch for quadratic buffers. Count-only runs get an empty vector, so the
/// primitives that consume it must bail out before indexing.
pub(crate) fn scratch<S: Scalar>(len: usize) -> Vec<S> {
    if S::COUNT_ONLY {
        Vec::new()
    } else {
        vec![S::zero(); len]
    }
}

/// `out (m×n) = a (m×k) · bᵀ` with `b` stored `n×k`.
pub(crate) fn gemm_nt<S: Scalar>(
    out: &mut [S],
    a: &[S],
    b: &[S],
    m: usize,
    k: usize,
    n: usize,
    ops: &mut OpCount,
) {
    ops.add(m * n * k);
    if S::COUNT_ONLY {
        return;
    }
    for i in 0..m {
        let ai = &a[i * k..(i + 1) * k];
        let oi = &mut out[i * n..(i + 1) * n];
        for (j, o) in oi.iter_mut().enumerate() {
            let bj = &b[j * k..(j + 1) * k];
            let mut acc = S::zero();
            for (&x, &y) in ai.iter().zip(bj) {
                acc += x * y;
            }
            *o = acc;
        }
    }
}

/// `out (m×n) += diag(row_scale) · a (m×k) · b (k×n)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm_acc<S: Scalar>(
    out: &mut [S],
    a: &[S],
    b: &[S],
    m: usize,
    k: usize,
    n: usize,
    row_scale: Option<&[S]>,
    ops: &mut OpCount,
) {
    ops.add(m * n * k);
    if S::COUNT_ONLY {
        return;
    }
    for i in 0..m {
        let ai = &a[i * k..(i + 1) * k];
        let oi = &mut out[i * n..(i + 1) * n];
        let s = row_scale.map(|w| w[i]);
        for (p, &x) in ai.iter().enumerate() {
            let coef = match s {
                Some(s) => s * x,
                None => x,
            };
            let bp = &b[p * n..(p + 1) * n];
            for (o, &y) in oi.iter_mut().zip(bp) {
                *o += coef * y;
            }
        }
    }
}

/// `out (k×n) += (diag(row_scale) · a)ᵀ · b` with `a` stored `m×k`, `b` stored `m×n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm_tn_acc<S: Scalar>(
    out: &mut [S],
    a: &[S],
    b: &[S],
    m: usize,
    k: usize,
    n: usize,
    row_scale: Option<&[S]>,
    ops: &mut OpCount,
) {
    ops.add(m * n * k);
    if S::COUNT_ONLY {
        return;
    }
    for t in 0..m {
        let at = &a[t * k..(t + 1) * k];
        let bt = &b[t * n..(t + 1) * n];
        let s = row_scale.map(|w| w[t]);
        for (p, &x) in at.iter().enumerate() {
            let coef = match s {
                Some(s) => s * x,
                None => x,
            };
            let op = &mut out[p * n..(p + 1) * n];
            for (o, &y) in op.iter_mut().zip(bt) {
                *o += coef * y;
            }
        }
    }
}

/// `buf *= factor`, elementwise.
pub(crate) fn scale<S: Scalar>(buf: &mut [S], factor: S) {
    if S::COUNT_ONLY {
        return;
    }
    for x in buf {
        *x = *x * factor;
    }
}

/// `a ⊙= b`, elementwise.
pub(crate) fn hadamard<S: Scalar>(a: &mut [S], b: &[S]) {
    if S::COUNT_ONLY {
        return;
    }
    for (x, &y) in a.iter_mut().zip(b) {
        *x = *x * y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Tally;

    #[test]
    fn gemm_nt_small() {
        // a = [[1,2],[3,4]], b = [[1,0],[1,1],[0,2]] -> a·bᵀ = [[1,3,4],[3,7,8]]
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [1.0, 0.0, 1.0, 1.0, 0.0, 2.0];
        let mut out = [0.0; 6];
        let mut ops = OpCount::new();
        gemm_nt(&mut out, &a, &b, 2, 2, 3, &mut ops);
        assert_eq!(out, [1.0, 3.0, 4.0, 3.0, 7.0, 8.0]);
        assert_eq!(ops.get(), 12);
    }

    #[test]
    fn gemm_acc_scaled_rows() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [1.0, 1.0, 0.0, 1.0];
        let mut out = [10.0, 0.0, 0.0, 0.0];
        let mut ops = OpCount::new();
        gemm_acc(&mut out, &a, &b, 2, 2, 2, Some(&[1.0, 0.5]), &mut ops);
        // rows of a·b: [1,3], [3,7]; second scaled by 0.5
        assert_eq!(out, [11.0, 3.0, 1.5, 3.5]);
        assert_eq!(ops.get(), 8);
    }

    #[test]
    fn gemm_tn_acc_matches_transpose_product() {
        // a (3×2), b (3×1): aᵀb
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, 1.0, 2.0];
        let mut out = [0.0; 2];
        let mut ops = OpCount::new();
        gemm_tn_acc(&mut out, &a, &b, 3, 2, 1, None, &mut ops);
        assert_eq!(out, [1.0 + 3.0 + 10.0, 2.0 + 4.0 + 12.0]);
        assert_eq!(ops.get(), 6);
    }

    #[test]
    fn count_only_skips_empty_scratch() {
        let mut out: Vec<Tally> = scratch(1 << 40);
        assert!(out.is_empty());
        let mut ops = OpCount::new();
        gemm_nt(&mut out, &[], &[], 1 << 20, 4, 1 << 20, &mut ops);
        assert_eq!(ops.get(), (1u64 << 40) * 4);
    }
}
