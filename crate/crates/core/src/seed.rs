//! Deterministic random number streams.
//!
//! Every random choice in the toolkit flows through a [`SeedStream`], a
//! SplitMix64 generator. Batch pipelines never share one stream across
//! images; instead each (image, purpose) pair gets its own stream via
//! [`derive_seed`], so outputs are bit-identical no matter how work is
//! split across threads, and adding draws for one purpose (say, picking
//! styles) never perturbs another (say, placing sites).

/// SplitMix64 pseudo-random stream.
///
/// Small, fast, and passes BigCrush; one `u64` of state makes the derived
/// per-image streams cheap to construct in the hot batch path.
#[derive(Debug, Clone)]
pub struct SeedStream {
    state: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { state: seed }
    }

    /// Next raw 64-bit output.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in `[0, 1)` built from the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, bound)` via Lemire's multiply-shift reduction.
    ///
    /// The bias of the plain multiply-shift is below 2^-64 per draw, far
    /// beneath anything observable here, and it keeps the draw count per
    /// decision fixed (exactly one), which the replay format relies on.
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0, "next_below bound must be positive");
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Bernoulli draw with success probability `p`.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Fisher-Yates shuffle of a slice.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        let n = items.len();
        for i in 0..n.saturating_sub(1) {
            let j = i + self.next_below((n - i) as u64) as usize;
            items.swap(i, j);
        }
    }

    /// First `take` entries of a random permutation of `0..n` (sampling
    /// without replacement). `take` must not exceed `n`.
    pub fn sample_indices(&mut self, n: usize, take: usize) -> Vec<usize> {
        debug_assert!(take <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..take {
            let j = i + self.next_below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(take);
        idx
    }
}

/// FNV-1a 64-bit hash, used to fold string identifiers into seeds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// Derive the independent stream for one (image, purpose) pair.
///
/// The stream is seeded with `global ^ fnv1a64(content_id) ^ fnv1a64(purpose)`.
/// Purposes are short static tags such as `"sites"`, `"flags"`, `"styles"`;
/// corruption pipelines qualify them with the level (`"noise:0.35"`) so each
/// severity gets its own stream.
pub fn derive_seed(global_seed: u64, content_id: &str, purpose: &str) -> SeedStream {
    SeedStream::new(global_seed ^ fnv1a64(content_id.as_bytes()) ^ fnv1a64(purpose.as_bytes()))
}
