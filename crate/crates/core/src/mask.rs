//! The lower-triangular mask `M` in its binary and exponentially decaying forms.
//!
//! Powers of the decay are always built by repeated multiplication, never with
//! `powi`/`powf`, so every path that needs `γ^k` sees the same rounding.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{DType, Element, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MaskKind {
    /// `M[i,j] = 1` for `i ≥ j`.
    BinaryCausal,
    /// `M[i,j] = γ^(i-j)` for `i ≥ j`.
    ExpDecay,
}

impl MaskKind {
    pub fn name(self) -> &'static str {
        match self {
            MaskKind::BinaryCausal => "binary",
            MaskKind::ExpDecay => "decay",
        }
    }
}

impl fmt::Display for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" | "causal" | "binary-causal" => Ok(MaskKind::BinaryCausal),
            "decay" | "exp-decay" | "exponential" => Ok(MaskKind::ExpDecay),
            other => Err(Error::Usage(format!("unknown mask kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskSpec {
    pub kind: MaskKind,
    /// Ignored for [`MaskKind::BinaryCausal`].
    pub gamma: f64,
}

impl MaskSpec {
    pub fn binary() -> Self {
        MaskSpec {
            kind: MaskKind::BinaryCausal,
            gamma: 1.0,
        }
    }

    pub fn decay(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(MaskSpec {
            kind: MaskKind::ExpDecay,
            gamma,
        })
    }

    /// Decay factor applied per step; `1` for the binary mask.
    pub fn effective_gamma(&self) -> f64 {
        match self.kind {
            MaskKind::BinaryCausal => 1.0,
            MaskKind::ExpDecay => self.gamma,
        }
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "gamma {gamma} outside [0, 1]"
        )))
    }
}

/// Writes the dense `n×n` mask into `out` (row-major). `gamma = None` is the binary mask.
pub(crate) fn fill_mask<S: Scalar>(out: &mut [S], n: usize, gamma: Option<S>) {
    if S::COUNT_ONLY {
        return;
    }
    for i in 0..n {
        let row = &mut out[i * n..(i + 1) * n];
        row[i] = S::one();
        let mut w = S::one();
        for j in (0..i).rev() {
            if let Some(g) = gamma {
                w = w * g;
            }
            row[j] = w;
        }
        for x in &mut row[i + 1..] {
            *x = S::zero();
        }
    }
}

/// `out[k] = gamma^(start_exp + k)` by incremental multiplication.
pub(crate) fn decay_powers<S: Scalar>(gamma: S, start_exp: usize, out: &mut [S]) {
    if out.is_empty() {
        return;
    }
    let mut w = S::one();
    for _ in 0..start_exp {
        w = w * gamma;
    }
    for x in out.iter_mut() {
        *x = w;
        w = w * gamma;
    }
}

/// `gamma^exp` by repeated multiplication.
pub(crate) fn power<S: Scalar>(gamma: S, exp: usize) -> S {
    let mut w = S::one();
    for _ in 0..exp {
        w = w * gamma;
    }
    w
}

fn materialize_as<S: Element>(spec: &MaskSpec, n: usize) -> Tensor {
    let gamma = match spec.kind {
        MaskKind::BinaryCausal => None,
        MaskKind::ExpDecay => Some(S::from_f64(spec.gamma)),
    };
    let mut buf = vec![S::zero(); n * n];
    fill_mask(&mut buf, n, gamma);
    S::wrap(&[n, n], buf)
}

/// Dense `n×n` mask. Only the oracle and vanilla paths ever need this.
pub fn materialize(spec: &MaskSpec, n: usize, dtype: DType) -> Result<Tensor> {
    if n == 0 {
        return Err(Error::InvalidShape("mask size must be at least 1".into()));
    }
    if spec.kind == MaskKind::ExpDecay {
        check_gamma(spec.gamma)?;
    }
    Ok(match dtype {
        DType::F64 => materialize_as::<f64>(spec, n),
        DType::F32 => materialize_as::<f32>(spec, n),
    })
}

/// `[gamma^start_exp, gamma^(start_exp+1), …]` of length `len`, as a 1-D `f64` tensor.
pub fn decay_weights(gamma: f64, start_exp: usize, len: usize) -> Result<Tensor> {
    check_gamma(gamma)?;
    if len == 0 {
        return Err(Error::InvalidShape(
            "decay weight length must be at least 1".into(),
        ));
    }
    let mut out = vec![0.0; len];
    decay_powers(gamma, start_exp, &mut out);
    Tensor::from_f64(&[len], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(spec: MaskSpec, n: usize) -> Vec<f64> {
        materialize(&spec, n, DType::F64).unwrap().to_f64_vec()
    }

    #[test]
    fn binary_mask_three() {
        assert_eq!(
            dense(MaskSpec::binary(), 3),
            vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn decay_mask_half() {
        assert_eq!(
            dense(MaskSpec::decay(0.5).unwrap(), 3),
            vec![1.0, 0.0, 0.0, 0.5, 1.0, 0.0, 0.25, 0.5, 1.0]
        );
    }

    #[test]
    fn zero_gamma_keeps_unit_diagonal() {
        assert_eq!(
            dense(MaskSpec::decay(0.0).unwrap(), 2),
            vec![1.0, 0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn empty_mask_rejected() {
        assert!(matches!(
            materialize(&MaskSpec::binary(), 0, DType::F64),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        assert!(MaskSpec::decay(1.2).is_err());
        assert!(decay_weights(-0.5, 0, 3).is_err());
    }

    #[test]
    fn decay_weights_examples() {
        assert_eq!(
            decay_weights(0.5, 0, 3).unwrap().to_f64_vec(),
            vec![1.0, 0.5, 0.25]
        );
        assert_eq!(
            decay_weights(0.5, 1, 2).unwrap().to_f64_vec(),
            vec![0.5, 0.25]
        );
        assert_eq!(decay_weights(1.0, 5, 4).unwrap().to_f64_vec(), vec![1.0; 4]);
    }

    #[test]
    fn unit_decay_equals_binary_exactly() {
        for n in [1, 2, 5, 17] {
            let a = materialize(&MaskSpec::decay(1.0).unwrap(), n, DType::F64).unwrap();
            let b = materialize(&MaskSpec::binary(), n, DType::F64).unwrap();
            assert!(a.bitwise_eq(&b));
        }
    }

    #[test]
    fn strict_upper_triangle_is_zero() {
        let n = 9;
        let m = dense(MaskSpec::decay(0.7).unwrap(), n);
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(m[i * n + j], 0.0);
            }
        }
    }

    proptest! {
        #[test]
        fn column_geometric_law(gamma in 0.0f64..=1.0, n in 2usize..40) {
            let m = dense(MaskSpec::decay(gamma).unwrap(), n);
            for j in 0..n {
                for i in j..n - 1 {
                    let lhs = m[(i + 1) * n + j];
                    let rhs = gamma * m[i * n + j];
                    prop_assert!((lhs - rhs).abs() <= 1e-15 * rhs.abs().max(f64::MIN_POSITIVE));
                }
            }
        }

        #[test]
        fn shifted_weights_factor(gamma in 0.0f64..=1.0, a in 0usize..30, len in 1usize..30) {
            let shifted = decay_weights(gamma, a, len).unwrap().to_f64_vec();
            let base = decay_weights(gamma, 0, len).unwrap().to_f64_vec();
            let ga = decay_weights(gamma, a, 1).unwrap().to_f64_vec()[0];
            for k in 0..len {
                let want = ga * base[k];
                prop_assert!((shifted[k] - want).abs() <= 1e-14 * want.abs() + 1e-300,
                    "k={} {} vs {}", k, shifted[k], want);
            }
        }
    }
}
