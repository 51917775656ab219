//! Seeded PRNG for reproducible sampling.
//!
//! All solvers draw indices from [`SplitMix64`], a 64-bit mixing generator
//! with a documented closed form, so a trace is reproducible from its seed
//! alone — on any platform, forever. Worker `k` of a parallel run uses the
//! derived stream [`SplitMix64::stream`]`(seed, k)`; serial runs use stream 0,
//! which is what makes single-worker parallel runs replay their serial
//! counterparts exactly.

/// SplitMix64: `state += 0x9E3779B97F4A7C15`, then two xor-shift-multiply
/// scrambles of the new state (Steele, Lea & Flood's finalizer).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    /// Generator seeded directly with `seed`.
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream `k` for base `seed`: the state is seeded with
    /// `scramble(seed ^ (k + 1) * 0x9E3779B97F4A7C15)` so distinct workers
    /// start far apart even for adjacent seeds.
    pub fn stream(seed: u64, k: u64) -> Self {
        let mut s = Self::new(seed ^ (k.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let derived = s.next_u64();
        Self::new(derived)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, n)` by the multiply-shift reduction
    /// `(next_u64() * n) >> 64`. The modulo bias is below `n / 2^64` and is
    /// accepted for the sake of a branch-free, documented reduction.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (((self.next_u64() as u128) * (n as u128)) >> 64) as usize
    }

    /// Uniform draw in `[0, 1)` from the high 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
