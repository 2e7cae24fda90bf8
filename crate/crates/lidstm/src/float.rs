//! Float abstraction so the network runs in `f32` for speed and in `f64` for
//! gradient checking, through the same code path.

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::Float;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// The scalar type used by the network. Implemented for `f32` and `f64`.
pub trait Real:
    Float
    + LinalgScalar
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;

    fn sigmoid(self) -> Self {
        Self::one() / (Self::one() + (-self).exp())
    }
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Reads and writes the SSE control/status register. The `_mm_getcsr` /
/// `_mm_setcsr` intrinsics are deprecated in favor of inline assembly.
#[cfg(target_arch = "x86_64")]
mod mxcsr {
    use std::arch::asm;

    pub(super) fn read() -> u32 {
        let mut csr: u32 = 0;
        // SAFETY: `stmxcsr` stores the MXCSR register into a local; no other
        // state is touched.
        unsafe {
            asm!("stmxcsr [{ptr}]", ptr = in(reg) &mut csr, options(nostack, preserves_flags));
        }
        csr
    }

    pub(super) fn write(csr: u32) {
        // SAFETY: `ldmxcsr` loads MXCSR from a local. Only the rounding /
        // flush behavior of SSE floating point changes, which Rust's float
        // semantics tolerate.
        unsafe {
            asm!("ldmxcsr [{ptr}]", ptr = in(reg) &csr, options(nostack, preserves_flags));
        }
    }
}

/// Scoped flush-to-zero / denormals-are-zero mode for the calling thread.
///
/// Once a model saturates (losses near zero, gates pinned), softmax tails and
/// saturated-gate derivatives fall into the `f32` subnormal range, and x86
/// cores handle subnormal arithmetic in microcode at a 10–100× penalty —
/// late training epochs become several times slower than early ones. Values
/// that small carry no learning signal, so training runs with them flushed
/// to zero. Results stay fully deterministic: the flag is part of the
/// training code path, applied identically on every run and every worker
/// thread.
///
/// The guard restores the previous FP environment on drop so the mode never
/// leaks into callers. On non-x86_64 targets this is a no-op.
pub struct SubnormalFlushGuard {
    #[cfg(target_arch = "x86_64")]
    saved_csr: u32,
}

impl SubnormalFlushGuard {
    pub fn new() -> Self {
        #[cfg(target_arch = "x86_64")]
        {
            let saved_csr = mxcsr::read();
            const FTZ_DAZ: u32 = 0x8040; // FTZ is bit 15, DAZ is bit 6.
            mxcsr::write(saved_csr | FTZ_DAZ);
            SubnormalFlushGuard { saved_csr }
        }
        #[cfg(not(target_arch = "x86_64"))]
        SubnormalFlushGuard {}
    }
}

impl Default for SubnormalFlushGuard {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for SubnormalFlushGuard {
    fn drop(&mut self) {
        #[cfg(target_arch = "x86_64")]
        mxcsr::write(self.saved_csr);
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}
