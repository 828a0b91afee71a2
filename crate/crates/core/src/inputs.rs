//! The `(B, C, V, γ)` bundle every kernel consumes, its validation, and seeded
//! random generation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::mask::{check_gamma, MaskKind, MaskSpec};
use crate::tensor::{DType, Tensor};

/// Name of the generator behind [`random_inputs`], recorded in reports.
pub const GENERATOR: &str = "ChaCha8 (rand_chacha 0.3) + StandardNormal (rand_distr 0.4)";

/// Extents of one attention problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProblemShape {
    pub batch: usize,
    pub heads: usize,
    pub seqlen: usize,
    pub rank: usize,
    pub dim: usize,
}

impl ProblemShape {
    pub fn new(batch: usize, heads: usize, seqlen: usize, rank: usize, dim: usize) -> Result<Self> {
        let shape = ProblemShape {
            batch,
            heads,
            seqlen,
            rank,
            dim,
        };
        for (name, v) in [
            ("batch", batch),
            ("heads", heads),
            ("seqlen", seqlen),
            ("rank", rank),
            ("dim", dim),
        ] {
            if v == 0 {
                return Err(Error::InvalidShape(format!("{name} must be at least 1")));
            }
        }
        Ok(shape)
    }

    pub fn slices(&self) -> usize {
        self.batch * self.heads
    }

    pub fn bc_dims(&self) -> [usize; 4] {
        [self.batch, self.heads, self.seqlen, self.rank]
    }

    pub fn v_dims(&self) -> [usize; 4] {
        [self.batch, self.heads, self.seqlen, self.dim]
    }
}

/// Inputs of `O = (B·Cᵀ ⊙ M)·V`, batched as `(batch, heads, N, ·)`.
#[derive(Clone, Debug)]
pub struct AttnInputs {
    /// `(batch, heads, N, r)`
    pub b: Tensor,
    /// `(batch, heads, N, r)`
    pub c: Tensor,
    /// `(batch, heads, N, d)`
    pub v: Tensor,
    /// One decay factor per head. Ignored by the binary mask.
    pub gamma: Vec<f64>,
    pub mask: MaskKind,
}

impl AttnInputs {
    pub fn new(b: Tensor, c: Tensor, v: Tensor, gamma: Vec<f64>, mask: MaskKind) -> Result<Self> {
        let inputs = AttnInputs {
            b,
            c,
            v,
            gamma,
            mask,
        };
        validate_inputs(&inputs)?;
        Ok(inputs)
    }

    /// Wraps unbatched `N×r`, `N×r`, `N×d` matrices as a single `(1, 1, ·, ·)` slice.
    pub fn single(b: Tensor, c: Tensor, v: Tensor, mask: MaskSpec) -> Result<Self> {
        let lift = |t: Tensor, name: &str| -> Result<Tensor> {
            match *t.dims() {
                [n, k] => t.reshape(&[1, 1, n, k]),
                ref dims => Err(Error::InvalidShape(format!(
                    "{name} must be 2-D, got {dims:?}"
                ))),
            }
        };
        AttnInputs::new(
            lift(b, "B")?,
            lift(c, "C")?,
            lift(v, "V")?,
            vec![mask.gamma],
            mask.kind,
        )
    }

    pub fn shape(&self) -> ProblemShape {
        let bd = self.b.dims();
        ProblemShape {
            batch: bd[0],
            heads: bd[1],
            seqlen: bd[2],
            rank: bd[3],
            dim: self.v.dims()[3],
        }
    }

    pub fn dtype(&self) -> DType {
        self.b.dtype()
    }

    pub fn mask_spec(&self, head: usize) -> MaskSpec {
        MaskSpec {
            kind: self.mask,
            gamma: self.gamma[head],
        }
    }

    pub fn cast(&self, dtype: DType) -> AttnInputs {
        AttnInputs {
            b: self.b.cast(dtype),
            c: self.c.cast(dtype),
            v: self.v.cast(dtype),
            gamma: self.gamma.clone(),
            mask: self.mask,
        }
    }
}

const AXES: [&str; 4] = ["batch", "heads", "sequence", "rank"];

fn check_finite(t: &Tensor) -> Result<()> {
    let bad = match (t.as_f64(), t.as_f32()) {
        (Some(v), _) => v.iter().position(|x| !x.is_finite()).map(|i| (i, v[i])),
        (_, Some(v)) => v
            .iter()
            .position(|x| !x.is_finite())
            .map(|i| (i, v[i] as f64)),
        _ => None,
    };
    match bad {
        Some((index, value)) => Err(Error::NonFinite { index, value }),
        None => Ok(()),
    }
}

/// Checks shapes, dtypes, decay factors, and finiteness of a bundle.
pub fn validate_inputs(inputs: &AttnInputs) -> Result<()> {
    let (b, c, v) = (&inputs.b, &inputs.c, &inputs.v);
    for (name, t) in [("B", b), ("C", c), ("V", v)] {
        if t.ndim() != 4 {
            return Err(Error::InvalidShape(format!(
                "{name} must be (batch, heads, N, ·), got dims {:?}",
                t.dims()
            )));
        }
    }
    for (axis, name) in AXES.iter().enumerate() {
        if b.dims()[axis] != c.dims()[axis] {
            return Err(Error::ShapeMismatch {
                axis: name,
                detail: format!("B has {} but C has {}", b.dims()[axis], c.dims()[axis]),
            });
        }
    }
    for (axis, name) in AXES[..3].iter().enumerate() {
        if v.dims()[axis] != b.dims()[axis] {
            return Err(Error::ShapeMismatch {
                axis: name,
                detail: format!("B has {} but V has {}", b.dims()[axis], v.dims()[axis]),
            });
        }
    }
    if b.dtype() != c.dtype() || b.dtype() != v.dtype() {
        return Err(Error::ShapeMismatch {
            axis: "dtype",
            detail: format!("B is {}, C is {}, V is {}", b.dtype(), c.dtype(), v.dtype()),
        });
    }
    let heads = b.dims()[1];
    if inputs.gamma.len() != heads {
        return Err(Error::ShapeMismatch {
            axis: "heads",
            detail: format!("{} heads but {} gamma values", heads, inputs.gamma.len()),
        });
    }
    for &g in &inputs.gamma {
        check_gamma(g)?;
    }
    for t in [b, c, v] {
        check_finite(t)?;
    }
    Ok(())
}

fn normal_tensor(rng: &mut ChaCha8Rng, dims: &[usize], dtype: DType) -> Result<Tensor> {
    let len = dims.iter().product();
    match dtype {
        DType::F64 => {
            Tensor::from_f64(dims, (0..len).map(|_| StandardNormal.sample(rng)).collect())
        }
        DType::F32 => {
            Tensor::from_f32(dims, (0..len).map(|_| StandardNormal.sample(rng)).collect())
        }
    }
}

/// Standard-normal `B`, `C`, `V` drawn in that order from one ChaCha8 stream.
/// Same arguments give bitwise-identical tensors.
pub fn random_inputs(
    shape: ProblemShape,
    dtype: DType,
    mask: MaskKind,
    gamma: f64,
    seed: u64,
) -> Result<AttnInputs> {
    check_gamma(gamma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = normal_tensor(&mut rng, &shape.bc_dims(), dtype)?;
    let c = normal_tensor(&mut rng, &shape.bc_dims(), dtype)?;
    let v = normal_tensor(&mut rng, &shape.v_dims(), dtype)?;
    AttnInputs::new(b, c, v, vec![gamma; shape.heads], mask)
}

/// Mixes a base seed with a configuration so every grid point gets its own stream.
pub fn config_seed(seed: u64, shape: &ProblemShape, salt: u64) -> u64 {
    // splitmix64 finalizer folded over the fields
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for x in [
        shape.batch as u64,
        shape.heads as u64,
        shape.seqlen as u64,
        shape.rank as u64,
        shape.dim as u64,
        salt,
    ] {
        h = h.wrapping_add(x).wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}
