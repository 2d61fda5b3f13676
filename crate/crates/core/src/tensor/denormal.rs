use std::marker::PhantomData;

#[cfg(target_arch = "x86_64")]
const FTZ_DAZ: u32 = 0x8040;

/// While alive, the current thread treats subnormal floats as zero (x86-64
/// FTZ and DAZ). The previous mode is restored on drop. Elsewhere a no-op.
///
/// Backpropagated gradients in the early conv layers drift into the
/// subnormal range, where each operation is dozens of times slower.
pub struct FlushDenormals {
    #[cfg(target_arch = "x86_64")]
    saved: u32,
    // the mode is per thread
    _not_send: PhantomData<*const ()>,
}

impl FlushDenormals {
    #[allow(deprecated)]
    pub fn new() -> Self {
        #[cfg(target_arch = "x86_64")]
        {
            use std::arch::x86_64::{_mm_getcsr, _mm_setcsr};
            // SAFETY: SSE is part of the x86-64 baseline; only the two
            // denormal control bits change.
            let saved = unsafe { _mm_getcsr() };
            unsafe { _mm_setcsr(saved | FTZ_DAZ) };
            FlushDenormals {
                saved,
                _not_send: PhantomData,
            }
        }
        #[cfg(not(target_arch = "x86_64"))]
        FlushDenormals { _not_send: PhantomData }
    }
}

impl Default for FlushDenormals {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for FlushDenormals {
    #[allow(deprecated)]
    fn drop(&mut self) {
        #[cfg(target_arch = "x86_64")]
        // SAFETY: restores the value read in `new`.
        unsafe {
            std::arch::x86_64::_mm_setcsr(self.saved)
        };
    }
}
