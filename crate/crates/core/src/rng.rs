//! Seeded, splittable random streams.
//!
//! A [`RandomStream`] is a ChaCha8 keystream keyed by a 64-bit seed and
//! positioned on one of 2^64 independent stream positions. Two streams with the
//! same `(seed, stream_index)` produce the same sequence bit for bit; streams
//! with different indices never overlap.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        Self {
            seed,
            stream_index,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Stream `index` of a keyspace derived from this stream's seed and `lane`.
    ///
    /// Lanes separate unrelated jobs (e.g. "paths" vs "reference draws") that
    /// each want their own run of stream indices.
    pub fn fork(&self, lane: u64, index: u64) -> RandomStream {
        RandomStream::new(derive_seed(self.seed, lane), index)
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        loop {
            // 53 random mantissa bits, shifted off zero.
            let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 && u < 1.0 {
                return u;
            }
        }
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        // Lemire's multiply-shift with rejection.
        let n64 = n as u64;
        let zone = n64.wrapping_neg() % n64;
        loop {
            let m = (self.rng.next_u64() as u128) * (n64 as u128);
            if (m as u64) >= zone {
                return (m >> 64) as usize;
            }
        }
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// SplitMix64 finaliser over `seed ^ f(lane)`.
pub fn derive_seed(seed: u64, lane: u64) -> u64 {
    let mut z = seed ^ lane.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
