//! PPM overlay emission: paints prediction/truth agreement per pixel.
//!
//! True positives are green, false positives red, false negatives blue,
//! and shared background black, so the color counts are exactly the
//! confusion counts.

use crate::mask::BinaryMask;
use crate::{Error, Result};

pub const TRUE_POSITIVE: [u8; 3] = [0, 255, 0];
pub const FALSE_POSITIVE: [u8; 3] = [255, 0, 0];
pub const FALSE_NEGATIVE: [u8; 3] = [0, 0, 255];
pub const TRUE_NEGATIVE: [u8; 3] = [0, 0, 0];

/// Pixel-level confusion counts `(tp, fp, fn, tn)` of `mask` against `truth`.
pub fn confusion_counts(
    mask: &BinaryMask,
    truth: &BinaryMask,
) -> Result<(usize, usize, usize, usize)> {
    if mask.size() != truth.size() {
        return Err(Error::dimension(format!(
            "mask sizes differ: {} vs {}",
            mask.size(),
            truth.size()
        )));
    }
    let mut counts = (0, 0, 0, 0);
    for (&p, &t) in mask.pixels().iter().zip(truth.pixels()) {
        match (p, t) {
            (1, 1) => counts.0 += 1,
            (1, 0) => counts.1 += 1,
            (0, 1) => counts.2 += 1,
            _ => counts.3 += 1,
        }
    }
    Ok(counts)
}

/// Renders the overlay as a binary `P6` PPM document.
pub fn overlay_ppm(mask: &BinaryMask, truth: &BinaryMask) -> Result<Vec<u8>> {
    if mask.size() != truth.size() {
        return Err(Error::dimension(format!(
            "mask sizes differ: {} vs {}",
            mask.size(),
            truth.size()
        )));
    }
    let k = mask.size();
    let mut out = format!("P6\n{k} {k}\n255\n").into_bytes();
    for (&p, &t) in mask.pixels().iter().zip(truth.pixels()) {
        let color = match (p, t) {
            (1, 1) => TRUE_POSITIVE,
            (1, 0) => FALSE_POSITIVE,
            (0, 1) => FALSE_NEGATIVE,
            _ => TRUE_NEGATIVE,
        };
        out.extend_from_slice(&color);
    }
    Ok(out)
}
