//! SplitMix64 and unbiased bounded draws on top of it.

/// SplitMix64 generator. Small enough to port to any language bit-for-bit,
/// which is what makes the golden vectors meaningful across hosts.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from `0..bound`.
    ///
    /// Raw outputs below `2^64 mod bound` are rejected so that the remaining
    /// range is an exact multiple of `bound`; a bound of zero means the full
    /// 64-bit range.
    pub fn below(&mut self, bound: u64) -> u64 {
        if bound == 0 {
            return self.next_u64();
        }
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    pub fn below_usize(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "bound must be non-zero");
        self.below(bound as u64) as usize
    }
}
