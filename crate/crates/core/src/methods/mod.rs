//! The seven attention kernels and the front door that routes to them.
//!
//! Every kernel computes the oracle's function slice by slice over
//! `(batch, head)` and reports the multiply-adds it spent. Kernels are generic
//! over [`Scalar`]; running them over [`Tally`] gives the op count alone.

mod block_based;
mod fleet;
mod fleet_tiled;
pub(crate) mod linalg;
mod recursion;
mod row_based;
mod two_level;
mod vanilla;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inputs::{validate_inputs, AttnInputs, ProblemShape};
use crate::mask::{check_gamma, MaskKind};
use crate::oracle::DEFAULT_MEM_CAP;
use crate::scalar::{Scalar, Tally};
use crate::tensor::{DType, Element, Tensor};

pub use linalg::OpCount;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodId {
    Vanilla,
    RowBased,
    BlockBased,
    Recursion,
    TwoLevelBlock,
    Fleet,
    FleetTiled,
    Auto,
}

impl MethodId {
    /// Every concrete kernel, in a fixed order.
    pub const KERNELS: [MethodId; 7] = [
        MethodId::Vanilla,
        MethodId::RowBased,
        MethodId::BlockBased,
        MethodId::Recursion,
        MethodId::TwoLevelBlock,
        MethodId::Fleet,
        MethodId::FleetTiled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Vanilla => "vanilla",
            MethodId::RowBased => "row-based",
            MethodId::BlockBased => "block-based",
            MethodId::Recursion => "recursion",
            MethodId::TwoLevelBlock => "two-level-block",
            MethodId::Fleet => "fleet",
            MethodId::FleetTiled => "fleet-tiled",
            MethodId::Auto => "auto",
        }
    }

    /// Parses a comma-separated list; `all` expands to every kernel.
    pub fn parse_list(s: &str) -> Result<Vec<MethodId>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("all") {
                out.extend(MethodId::KERNELS);
            } else {
                out.push(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::Usage("empty method list".into()));
        }
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "vanilla" => MethodId::Vanilla,
            "row-based" | "rowbased" | "causal-dot-product" | "cdotp" => MethodId::RowBased,
            "block-based" | "blockbased" | "bb" => MethodId::BlockBased,
            "recursion" | "recur" => MethodId::Recursion,
            "two-level-block" | "lightning" | "lightning-attention-2" | "la" => {
                MethodId::TwoLevelBlock
            }
            "fleet" | "fleet-attention" => MethodId::Fleet,
            "fleet-tiled" | "fleettiled" => MethodId::FleetTiled,
            "auto" => MethodId::Auto,
            _ => return Err(Error::Usage(format!("unknown method `{s}`"))),
        })
    }
}

/// Tiling and resource knobs shared by all kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockParams {
    /// Row block for `block-based` and `two-level-block`.
    pub block_size: usize,
    /// Recursion hands sub-problems of at most this many rows to `row-based`.
    pub recursion_threshold: usize,
    /// Row block for `fleet-tiled`.
    pub row_block: usize,
    /// Column block of `V` for `fleet-tiled`; `None` means `min(d, 64)`.
    pub col_block: Option<usize>,
    /// Byte cap on the `N×N` buffers held by `vanilla`.
    pub mem_cap_bytes: u64,
}

impl Default for BlockParams {
    fn default() -> Self {
        BlockParams {
            block_size: 64,
            recursion_threshold: 32,
            row_block: 64,
            col_block: None,
            mem_cap_bytes: DEFAULT_MEM_CAP,
        }
    }
}

impl BlockParams {
    /// Same knobs with every block size set to `size`.
    pub fn with_blocks(size: usize) -> Self {
        BlockParams {
            block_size: size,
            row_block: size,
            col_block: Some(size),
            ..BlockParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("block size", self.block_size),
            ("recursion threshold", self.recursion_threshold),
            ("row block", self.row_block),
            ("column block", self.col_block.unwrap_or(1)),
        ] {
            if v == 0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be at least 1"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn col_block_for(&self, d: usize) -> usize {
        self.col_block.unwrap_or(d.min(64))
    }
}

/// Output of one kernel invocation.
#[derive(Clone, Debug)]
pub struct KernelOutput {
    pub output: Tensor,
    pub opcount: u64,
}

/// One `(batch, head)` slice: `b`, `c` are `n×r`, `v` is `n×d`.
/// `gamma` is `None` for the binary mask.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Head<'a, S> {
    pub b: &'a [S],
    pub c: &'a [S],
    pub v: &'a [S],
    pub n: usize,
    pub r: usize,
    pub d: usize,
    pub gamma: Option<S>,
}

impl<'a, S: Scalar> Head<'a, S> {
    /// Rows `lo..hi` as their own slice.
    pub fn rows(&self, lo: usize, hi: usize) -> Head<'a, S> {
        Head {
            b: &self.b[lo * self.r..hi * self.r],
            c: &self.c[lo * self.r..hi * self.r],
            v: &self.v[lo * self.d..hi * self.d],
            n: hi - lo,
            ..*self
        }
    }
}

/// Runs kernel `id` on one slice, writing into the zeroed `out` (`n×d`).
pub(crate) fn run_head<S: Scalar>(
    id: MethodId,
    head: &Head<'_, S>,
    params: &BlockParams,
    out: &mut [S],
    ops: &mut OpCount,
) -> Result<()> {
    match id {
        MethodId::Vanilla => vanilla::run(head, params, out, ops),
        MethodId::RowBased => {
            row_based::run(head, out, ops);
            Ok(())
        }
        MethodId::BlockBased => {
            block_based::run(head, params.block_size, out, ops);
            Ok(())
        }
        MethodId::Recursion => recursion::run(head, params.recursion_threshold, out, ops),
        MethodId::TwoLevelBlock => {
            two_level::run(head, params.block_size, out, ops);
            Ok(())
        }
        MethodId::Fleet => {
            fleet::run(head, out, ops);
            Ok(())
        }
        MethodId::FleetTiled => {
            fleet_tiled::run(
                head,
                params.row_block,
                params.col_block_for(head.d),
                out,
                ops,
            );
            Ok(())
        }
        MethodId::Auto => Err(Error::Usage(
            "`auto` must be resolved by dispatch before running a kernel".into(),
        )),
    }
}

fn run_typed<S: Element>(
    id: MethodId,
    inputs: &AttnInputs,
    params: &BlockParams,
) -> Result<KernelOutput> {
    let shape = inputs.shape();
    let (n, r, d) = (shape.seqlen, shape.rank, shape.dim);
    let (b, c, v) = (
        S::slice(&inputs.b).expect("dtype validated"),
        S::slice(&inputs.c).expect("dtype validated"),
        S::slice(&inputs.v).expect("dtype validated"),
    );
    let mut out = vec![S::zero(); shape.slices() * n * d];
    let mut ops = OpCount::new();
    for slice in 0..shape.slices() {
        let gamma = match inputs.mask {
            MaskKind::BinaryCausal => None,
            MaskKind::ExpDecay => Some(S::from_f64(inputs.gamma[slice % shape.heads])),
        };
        let head = Head {
            b: &b[slice * n * r..(slice + 1) * n * r],
            c: &c[slice * n * r..(slice + 1) * n * r],
            v: &v[slice * n * d..(slice + 1) * n * d],
            n,
            r,
            d,
            gamma,
        };
        run_head(
            id,
            &head,
            params,
            &mut out[slice * n * d..(slice + 1) * n * d],
            &mut ops,
        )?;
    }
    Ok(KernelOutput {
        output: S::wrap(&shape.v_dims(), out),
        opcount: ops.get(),
    })
}

/// Runs a concrete kernel over every `(batch, head)` slice, in the input dtype.
pub fn run_method(id: MethodId, inputs: &AttnInputs, params: &BlockParams) -> Result<KernelOutput> {
    if id == MethodId::Auto {
        return Err(Error::Usage(
            "`auto` must be resolved by dispatch before running a kernel".into(),
        ));
    }
    params.validate()?;
    validate_inputs(inputs)?;
    match inputs.dtype() {
        DType::F64 => run_typed::<f64>(id, inputs, params),
        DType::F32 => run_typed::<f32>(id, inputs, params),
    }
}

/// Multiply-add count of kernel `id` on a problem of `shape`, without doing the
/// arithmetic or holding any data-sized memory.
pub fn count_ops(
    id: MethodId,
    shape: ProblemShape,
    mask: MaskKind,
    gamma: f64,
    params: &BlockParams,
) -> Result<u64> {
    if id == MethodId::Auto {
        return Err(Error::Usage("cannot count ops for `auto`".into()));
    }
    params.validate()?;
    check_gamma(gamma)?;
    let (n, r, d) = (shape.seqlen, shape.rank, shape.dim);
    let bc = vec![Tally; n * r];
    let v = vec![Tally; n * d];
    let mut out = vec![Tally; n * d];
    let gamma = match mask {
        MaskKind::BinaryCausal => None,
        MaskKind::ExpDecay => Some(Tally),
    };
    let head = Head {
        b: &bc,
        c: &bc,
        v: &v,
        n,
        r,
        d,
        gamma,
    };
    let mut ops = OpCount::new();
    run_head(id, &head, params, &mut out, &mut ops)?;
    Ok(ops.get() * shape.slices() as u64)
}
