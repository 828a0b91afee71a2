//! Causal linear attention `O = (B·Cᵀ ⊙ M)·V` with binary or exponentially
//! decaying causal masks.
//!
//! Seven kernels compute the same function with different schedules
//! ([`methods`]); a brute-force reference ([`oracle`]) checks them; [`dispatch`]
//! picks a kernel from the problem shape; [`bench`] times them and fits their
//! multiply-add counts against complexity models.

pub mod bench;
pub mod cli;
pub mod dispatch;
pub mod error;
pub mod inputs;
pub mod io;
pub mod mask;
pub mod methods;
pub mod oracle;
pub mod scalar;
pub mod scan;
pub mod tensor;
pub mod verify;

pub use dispatch::{decode, explain, DispatchPolicy, Resolution};
pub use error::{Error, Result};
pub use inputs::{random_inputs, validate_inputs, AttnInputs, ProblemShape};
pub use mask::{MaskKind, MaskSpec};
pub use methods::{count_ops, run_method, BlockParams, KernelOutput, MethodId};
pub use oracle::{oracle_attn, DEFAULT_MEM_CAP};
pub use tensor::{DType, Tensor};
