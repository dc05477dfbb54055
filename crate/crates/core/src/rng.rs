//! Deterministic pseudo-random primitives for the instance generator.
//!
//! The exact algorithms are part of the instance-file contract: the same
//! seed must produce byte-identical instances on every platform and in
//! every implementation language, so nothing here depends on an external
//! RNG crate.
//!
//! * Stream: SplitMix64. The state starts at the seed and advances by the
//!   golden-ratio increment `0x9E3779B97F4A7C15`; each output is the state
//!   scrambled by the standard `xor-shift / multiply` finaliser.
//! * Bounded integers: modulo rejection. For a range of size `m`, draw
//!   64-bit values until one is at least `2^64 mod m`, then reduce mod `m`.
//! * Uniform j-subsets: partial Fisher-Yates over the sorted candidate
//!   index array, swapping positions `0..j` each with a uniform position to
//!   its right (inclusive); the first `j` entries, sorted, are the subset.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `[lo, hi]`, inclusive on both ends.
    pub fn uniform(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        let range = hi - lo + 1;
        if range == 0 {
            // Full 64-bit range.
            return self.next_u64();
        }
        let threshold = range.wrapping_neg() % range; // 2^64 mod range
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return lo + x % range;
            }
        }
    }

    pub fn uniform_usize(&mut self, lo: usize, hi: usize) -> usize {
        self.uniform(lo as u64, hi as u64) as usize
    }

    /// A uniform `j`-subset of `candidates`, returned sorted.
    ///
    /// `candidates` must be sorted and duplicate-free for the draw to be
    /// reproducible across implementations.
    pub fn subset(&mut self, candidates: &[u32], j: usize) -> Vec<u32> {
        debug_assert!(j <= candidates.len());
        let mut pool = candidates.to_vec();
        for i in 0..j {
            let r = self.uniform_usize(i, pool.len() - 1);
            pool.swap(i, r);
        }
        let mut picked = pool[..j].to_vec();
        picked.sort_unstable();
        picked
    }
}
