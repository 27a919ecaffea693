//! Seeded random numbers with a fixed, platform-independent algorithm.
//!
//! * seeding and stream splitting: SplitMix64
//!   (`0x9E3779B97F4A7C15`, `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`)
//! * uniform stream: xoshiro256** (rotations 7, 45, 17; multipliers 5 and 9)
//! * uniforms in `[0, 1)`: top 53 bits scaled by `2^-53`
//! * standard normals: Marsaglia polar method, second variate cached
//!
//! Changing any of these changes every simulated dataset, so [`ALGORITHM`]
//! names the combination and is written into reports.

/// Identifier of the generator combination.
pub const ALGORITHM: &str = "xoshiro256ss-splitmix64-polar-v1";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
/// Multiplier decorrelating stream indices before SplitMix64 seeding.
const STREAM_MIX: u64 = 0xD1B5_4A32_D192_ED03;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [splitmix64(&mut sm), splitmix64(&mut sm), splitmix64(&mut sm), splitmix64(&mut sm)];
        Self { s, spare_normal: None }
    }

    /// Independent generator number `index` derived from `master_seed`.
    pub fn stream(master_seed: u64, index: u64) -> Self {
        let mut sm = master_seed ^ index.wrapping_add(1).wrapping_mul(STREAM_MIX);
        Self::new(splitmix64(&mut sm))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = libm::sqrt(-2.0 * libm::log(s) / s);
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// Uniform index in `0..n` (Lemire's multiply-shift, rejection-free bias
    /// below `n / 2^64`).
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
