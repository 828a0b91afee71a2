//! Element types the kernels are generic over.
//!
//! Besides `f32` and `f64` there is [`Tally`], a zero-sized element whose
//! arithmetic is a no-op. Running a kernel over `Tally` walks the same control
//! flow and records the same multiply-add count as a real run, without touching
//! memory proportional to the data. Complexity fits use it to reach sequence
//! lengths whose quadratic buffers would never fit in RAM.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul};

pub trait Scalar:
    Copy
    + Debug
    + Default
    + Send
    + Sync
    + PartialEq
    + Add<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + 'static
{
    /// Arithmetic is elided; only the op meter is advanced.
    const COUNT_ONLY: bool = false;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    #[inline(always)]
    fn zero() -> Self {
        0.0
    }
    #[inline(always)]
    fn one() -> Self {
        1.0
    }
    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline(always)]
    fn zero() -> Self {
        0.0
    }
    #[inline(always)]
    fn one() -> Self {
        1.0
    }
    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Zero-sized count-only element.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally;

impl Add for Tally {
    type Output = Tally;
    #[inline(always)]
    fn add(self, _: Tally) -> Tally {
        Tally
    }
}

impl Mul for Tally {
    type Output = Tally;
    #[inline(always)]
    fn mul(self, _: Tally) -> Tally {
        Tally
    }
}

impl AddAssign for Tally {
    #[inline(always)]
    fn add_assign(&mut self, _: Tally) {}
}

impl Scalar for Tally {
    const COUNT_ONLY: bool = true;

    fn zero() -> Self {
        Tally
    }
    fn one() -> Self {
        Tally
    }
    fn from_f64(_: f64) -> Self {
        Tally
    }
    fn to_f64(self) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_is_zero_sized() {
        assert_eq!(std::mem::size_of::<Tally>(), 0);
    }
}
