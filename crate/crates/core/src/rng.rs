//! Counter-based Gaussian streams.
//!
//! Every `(seed, stream, index)` triple maps to one standard normal, so any
//! path or step can be regenerated without replaying the ones before it.
//! Normals come from the inverse CDF, which is bit-stable across platforms.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::function::erf::erfc_inv;

/// Maps 64 random bits to a uniform in `(0, 1)`, never hitting either end.
/// 52 bits keep `(k + 1/2) 2^{-52}` exactly representable up to `1 - 2^{-53}`.
pub fn uniform_from_bits(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Standard normal quantile of a uniform draw: `-sqrt(2) erfc^{-1}(2u)`,
/// evaluated on the lower half and reflected (`1 - u` is exact here).
pub fn normal_from_uniform(u: f64) -> f64 {
    if u > 0.5 {
        return -normal_from_uniform(1.0 - u);
    }
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

/// Independent child seed for a labelled sub-experiment (splitmix64 finalizer).
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sequential reader of the normals `Z(seed, stream, start), Z(.., start + 1), ...`.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64, start: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        // one normal per u64, i.e. per two 32-bit words
        rng.set_word_pos(2 * start as u128);
        NormalStream { rng }
    }

    pub fn next_normal(&mut self) -> f64 {
        normal_from_uniform(uniform_from_bits(self.rng.next_u64()))
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_normal();
        }
    }
}
