//! Seeded synthetic mask corpora: smooth elliptical blobs standing in for
//! dataset masks at desk scale.
//!
//! Each mask is the union of 1–4 random ellipses, sometimes minus an
//! elliptical hole, redrawn until the foreground fraction lands in
//! `[0.05, 0.95]` and at least one aligned 8×8 tile is mixed. Generation is
//! a pure function of `(seed, count, K)`: every index gets its own stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::mask::BinaryMask;
use crate::{Error, Result};

/// Foreground fraction bounds every generated mask satisfies.
pub const FRACTION_BOUNDS: (f64, f64) = (0.05, 0.95);

const MIN_SIZE: usize = 8;

#[derive(Debug, Clone, Copy)]
struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    angle: f64,
}

impl Ellipse {
    fn random(rng: &mut ChaCha8Rng, k: f64, scale: (f64, f64)) -> Self {
        Ellipse {
            cx: rng.random_range(0.2 * k..0.8 * k),
            cy: rng.random_range(0.2 * k..0.8 * k),
            a: rng.random_range(scale.0 * k..scale.1 * k),
            b: rng.random_range(scale.0 * k..scale.1 * k),
            angle: rng.random_range(0.0..std::f64::consts::PI),
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let (sin, cos) = self.angle.sin_cos();
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

fn draw_mask(rng: &mut ChaCha8Rng, k: usize) -> BinaryMask {
    let kf = k as f64;
    let blob_count = rng.random_range(1..=4usize);
    // Small ellipses keep the boundary-to-area ratio close to real
    // instance masks; large smooth blobs would be unrepresentatively easy
    // for a global frequency code.
    let blobs: Vec<Ellipse> = (0..blob_count)
        .map(|_| Ellipse::random(rng, kf, (0.06, 0.16)))
        .collect();
    let hole = if rng.random::<f64>() < 0.6 {
        // A smaller ellipse centered inside one of the blobs.
        let host = blobs[rng.random_range(0..blobs.len())];
        Some(Ellipse {
            cx: host.cx + rng.random_range(-0.2..0.2) * host.a,
            cy: host.cy + rng.random_range(-0.2..0.2) * host.b,
            a: host.a * rng.random_range(0.3..0.7),
            b: host.b * rng.random_range(0.3..0.7),
            angle: rng.random_range(0.0..std::f64::consts::PI),
        })
    } else {
        None
    };
    let mut mask = BinaryMask::zeros(k);
    for row in 0..k {
        let y = row as f64 + 0.5;
        for col in 0..k {
            let x = col as f64 + 0.5;
            let inside = blobs.iter().any(|e| e.contains(x, y))
                && !hole.map(|e| e.contains(x, y)).unwrap_or(false);
            if inside {
                mask.set(row, col, true);
            }
        }
    }
    mask
}

fn has_mixed_tile(mask: &BinaryMask) -> bool {
    let k = mask.size();
    let tiles = k / MIN_SIZE;
    for tr in 0..tiles {
        for tc in 0..tiles {
            let mut ones = 0usize;
            for r in 0..MIN_SIZE {
                for c in 0..MIN_SIZE {
                    ones += usize::from(mask.get(tr * MIN_SIZE + r, tc * MIN_SIZE + c));
                }
            }
            if ones != 0 && ones != MIN_SIZE * MIN_SIZE {
                return true;
            }
        }
    }
    false
}

fn acceptable(mask: &BinaryMask) -> bool {
    let fraction = mask.foreground_fraction();
    fraction >= FRACTION_BOUNDS.0 && fraction <= FRACTION_BOUNDS.1 && has_mixed_tile(mask)
}

/// Generates `count` masks at resolution `k`, deterministically in
/// `(seed, count, k)`. Requires `k ≥ 8` so the mixed-tile constraint is
/// meaningful.
pub fn synth_corpus(seed: u64, count: usize, k: usize) -> Result<Vec<BinaryMask>> {
    if count == 0 {
        return Err(Error::config("corpus count must be at least 1"));
    }
    if !(MIN_SIZE..=crate::MAX_SIDE).contains(&k) {
        return Err(Error::config(format!(
            "corpus resolution must be in {MIN_SIZE}..={}, got {k}",
            crate::MAX_SIDE
        )));
    }
    let mut corpus = Vec::with_capacity(count);
    for index in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let mask = loop {
            let candidate = draw_mask(&mut rng, k);
            if acceptable(&candidate) {
                break candidate;
            }
        };
        corpus.push(mask);
    }
    Ok(corpus)
}

/// SHA-256 of the row-major pixel labels, hex-encoded.
pub fn mask_digest(mask: &BinaryMask) -> String {
    let digest = Sha256::digest(mask.pixels());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Corpus description written alongside generated masks.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorpusManifest {
    pub seed: u64,
    pub count: usize,
    pub resolution: usize,
    pub digests: Vec<String>,
}

/// Builds the manifest for a generated corpus.
pub fn corpus_manifest(seed: u64, k: usize, corpus: &[BinaryMask]) -> CorpusManifest {
    CorpusManifest {
        seed,
        count: corpus.len(),
        resolution: k,
        digests: corpus.iter().map(mask_digest).collect(),
    }
}
