//! Counter-based pseudo-random generator.
//!
//! All randomness in the library flows through [`SplitMix64`], a 64-bit
//! counter generator. Independent streams (one per solver read, one per
//! sampling run) are derived by XOR-ing the user seed with a stream index,
//! so results do not depend on thread scheduling.

/// SplitMix64: every output is a bijective mix of an incrementing counter.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Stream for read/shot number `index` under `seed`.
    pub fn stream(seed: u64, index: u64) -> Self {
        Self::new(seed ^ index)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform in 0..n (n > 0), without modulo bias.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform integer in lo..=hi.
    pub fn next_int_in(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        lo + self.next_index((hi - lo + 1) as usize) as i64
    }

    /// Random bitstring of the given length.
    pub fn next_bits(&mut self, len: usize) -> Vec<u8> {
        (0..len).map(|_| (self.next_u64() >> 63) as u8).collect()
    }
}
