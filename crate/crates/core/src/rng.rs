//! Seedable, splittable random streams.
//!
//! Every trial owns a [`ChaCha8Rng`] keyed by the master seed and running on
//! its own stream (the trial index), so trials are bit-reproducible no matter
//! how they are scheduled across threads.

use rand::{RngCore, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent stream for `(master_seed, index)`.
pub fn stream(master_seed: u64, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Sixty-four independent Bernoulli bits, each set with probability
/// `threshold / 2^64` (`None` meaning probability one).
///
/// Bits are resolved most-significant-bit first against a virtual uniform
/// 64-bit integer per lane, so most calls finish after a handful of words.
pub fn bernoulli_word<R: RngCore + ?Sized>(rng: &mut R, threshold: Option<u64>) -> u64 {
    let t = match threshold {
        None => return u64::MAX,
        Some(0) => return 0,
        Some(t) => t,
    };
    let mut undecided = u64::MAX;
    let mut hits = 0u64;
    for bit in (0..64).rev() {
        let r = rng.next_u64();
        if (t >> bit) & 1 == 1 {
            // uniform bit 0 against threshold bit 1 decides "below"
            hits |= undecided & !r;
            undecided &= r;
        } else {
            undecided &= !r;
        }
        if undecided == 0 {
            break;
        }
    }
    hits
}

/// Fixed-point threshold used by [`bernoulli_word`] for probability `p`.
pub fn threshold(p: f64) -> Option<u64> {
    if p >= 1.0 {
        None
    } else if p <= 0.0 {
        Some(0)
    } else {
        // p < 1, so the product stays below 2^64
        Some((p * 18_446_744_073_709_551_616.0) as u64)
    }
}

/// A uniform draw in `[0, 1)` with 53 bits of precision.
pub fn unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in `[0, bound)`; `bound` must be positive.
pub fn below<R: RngCore + ?Sized>(rng: &mut R, bound: usize) -> usize {
    use rand::Rng;
    rng.gen_range(0..bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_and_repeat() {
        let a: Vec<u64> = (0..4).map(|_| stream(7, 0).next_u64()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        assert_ne!(stream(7, 0).next_u64(), stream(7, 1).next_u64());
        assert_ne!(stream(7, 0).next_u64(), stream(8, 0).next_u64());
    }

    #[test]
    fn bernoulli_word_edges() {
        let mut rng = stream(1, 0);
        assert_eq!(bernoulli_word(&mut rng, threshold(1.0)), u64::MAX);
        assert_eq!(bernoulli_word(&mut rng, threshold(0.0)), 0);
    }

    #[test]
    fn bernoulli_word_frequency() {
        let mut rng = stream(2, 0);
        for &p in &[0.5, 0.3, 0.025, 0.9] {
            let words = 20_000;
            let ones: u64 = (0..words)
                .map(|_| bernoulli_word(&mut rng, threshold(p)).count_ones() as u64)
                .sum();
            let trials = (words * 64) as f64;
            let sigma = (p * (1.0 - p) / trials).sqrt();
            let est = ones as f64 / trials;
            assert!((est - p).abs() < 4.0 * sigma, "p={p} est={est}");
        }
    }
}
