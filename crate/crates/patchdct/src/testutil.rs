//! Shared helpers for unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mask::BinaryMask;

/// Uniformly random labels; useful for exact round-trip checks.
pub(crate) fn random_mask(k: usize, seed: u64) -> BinaryMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = (0..k * k).map(|_| rng.random_range(0..=1u8)).collect();
    BinaryMask::from_pixels(k, pixels).unwrap()
}

/// A filled disc with jittered center and radius; smooth boundary, always
/// both classes present at reasonable sizes.
pub(crate) fn disc_mask(k: usize, seed: u64) -> BinaryMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cx = k as f64 / 2.0 + rng.random_range(-2.0..2.0);
    let cy = k as f64 / 2.0 + rng.random_range(-2.0..2.0);
    let radius = k as f64 * rng.random_range(0.25..0.4);
    let mut mask = BinaryMask::zeros(k);
    for r in 0..k {
        for c in 0..k {
            let dr = r as f64 + 0.5 - cy;
            let dc = c as f64 + 0.5 - cx;
            if (dr * dr + dc * dc).sqrt() <= radius {
                mask.set(r, c, true);
            }
        }
    }
    mask
}
