//! Mask IoU, boundary IoU, and corpus aggregation.
//!
//! The boundary band of a mask is the set of its pixels within Euclidean
//! distance `d` of the background, where the image frame also counts as
//! background (a full-frame mask still has a band along the frame). Bands
//! come from an exact two-pass squared Euclidean distance transform;
//! boundary IoU is plain IoU restricted to the two bands.

use serde::{Deserialize, Serialize};

use crate::mask::BinaryMask;
use crate::{Error, Result};

/// Intersection over union; 1.0 when both masks are empty.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if a.size() != b.size() {
        return Err(Error::dimension(format!(
            "mask sizes differ: {} vs {}",
            a.size(),
            b.size()
        )));
    }
    let mut intersection = 0usize;
    let mut union = 0usize;
    for (&pa, &pb) in a.pixels().iter().zip(b.pixels()) {
        intersection += usize::from(pa == 1 && pb == 1);
        union += usize::from(pa == 1 || pb == 1);
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(intersection as f64 / union as f64)
}

/// Band width used by the paper-style reports: `max(1, round(0.02·√2·K))`,
/// the boundary metric's dilation ratio applied to the crop diagonal.
pub fn default_band_width(mask_size: usize) -> u32 {
    let d = (0.02 * std::f64::consts::SQRT_2 * mask_size as f64).round() as u32;
    d.max(1)
}

/// 1-D squared distance transform (lower envelope of parabolas).
///
/// `f` holds per-column squared distances; returns the row-wise relaxation
/// `d(q) = min_v (q - v)² + f(v)`. Envelope intersections use f64, but each
/// output is computed in integer arithmetic from the chosen site, so results
/// are exact for the small integer inputs this module produces.
fn edt_1d(f: &[u64]) -> Vec<u64> {
    let n = f.len();
    let mut sites = vec![0usize; n];
    let mut bounds = vec![0.0f64; n + 1]; // boundaries between parabolas
    let mut k = 0usize;
    bounds[0] = f64::NEG_INFINITY;
    bounds[1] = f64::INFINITY;

    let intersect = |q: usize, p: usize| -> f64 {
        let fq = f[q] + (q * q) as u64;
        let fp = f[p] + (p * p) as u64;
        (fq as f64 - fp as f64) / ((2 * q - 2 * p) as f64)
    };
    for q in 1..n {
        let mut s = intersect(q, sites[k]);
        while s <= bounds[k] {
            k -= 1;
            s = intersect(q, sites[k]);
        }
        k += 1;
        sites[k] = q;
        bounds[k] = s;
        bounds[k + 1] = f64::INFINITY;
    }

    let mut out = vec![0u64; n];
    let mut j = 0usize;
    for (q, slot) in out.iter_mut().enumerate() {
        while bounds[j + 1] < q as f64 {
            j += 1;
        }
        let site = sites[j];
        let dq = q.abs_diff(site) as u64;
        *slot = dq * dq + f[site];
    }
    out
}

/// Exact squared Euclidean distance from each pixel to the nearest
/// background pixel, with the frame treated as background. Computed on a
/// zero-padded grid: a column pass builds vertical squared distances, a row
/// pass relaxes them with the envelope transform.
fn squared_distance_to_background(mask: &BinaryMask) -> Vec<u64> {
    let k = mask.size();
    let padded = k + 2;
    // Vertical pass over the padded grid.
    let mut vertical = vec![0u64; padded * padded];
    for col in 0..padded {
        let mut dist: u64 = 0; // border row is background
        for row in 0..padded {
            let fg = row >= 1 && row <= k && col >= 1 && col <= k && mask.get(row - 1, col - 1);
            dist = if fg { dist + 1 } else { 0 };
            vertical[row * padded + col] = dist;
        }
        let mut dist: u64 = 0;
        for row in (0..padded).rev() {
            let fg = row >= 1 && row <= k && col >= 1 && col <= k && mask.get(row - 1, col - 1);
            dist = if fg { dist + 1 } else { 0 };
            let cell = &mut vertical[row * padded + col];
            *cell = (*cell).min(dist);
        }
    }
    // Horizontal envelope pass, then crop the padding.
    let mut out = vec![0u64; k * k];
    let mut row_buf = vec![0u64; padded];
    for row in 1..=k {
        for col in 0..padded {
            let g = vertical[row * padded + col];
            row_buf[col] = g * g;
        }
        let relaxed = edt_1d(&row_buf);
        out[(row - 1) * k..row * k].copy_from_slice(&relaxed[1..=k]);
    }
    out
}

/// Pixels of `mask` whose Euclidean distance to the background is at most
/// `d`. Always a subset of the mask; grows with `d`.
pub fn boundary_band(mask: &BinaryMask, d: u32) -> BinaryMask {
    let k = mask.size();
    let dist_sq = squared_distance_to_background(mask);
    let limit = u64::from(d) * u64::from(d);
    let mut band = BinaryMask::zeros(k);
    for row in 0..k {
        for col in 0..k {
            if mask.get(row, col) && dist_sq[row * k + col] <= limit {
                band.set(row, col, true);
            }
        }
    }
    band
}

/// IoU of the two boundary bands; 1.0 when both bands are empty.
pub fn boundary_iou(a: &BinaryMask, b: &BinaryMask, d: u32) -> Result<f64> {
    if a.size() != b.size() {
        return Err(Error::dimension(format!(
            "mask sizes differ: {} vs {}",
            a.size(),
            b.size()
        )));
    }
    iou(&boundary_band(a, d), &boundary_band(b, d))
}

/// One evaluated mask pair.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalRow {
    pub label: String,
    pub iou: f64,
    pub boundary_iou: f64,
}

/// Sweep configuration key carried in every report so outputs are
/// self-describing. Fields that do not apply stay `None`.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ReportKey {
    pub patch_size: Option<usize>,
    pub patch_dim: Option<usize>,
    pub global_dim: Option<usize>,
    pub stages: Option<usize>,
    pub flip_prob: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub band: Option<u32>,
    pub seed: Option<u64>,
}

/// Aggregate statistics over evaluated pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub key: ReportKey,
    pub count: usize,
    pub mean_iou: f64,
    pub min_iou: f64,
    pub max_iou: f64,
    pub mean_boundary_iou: f64,
    pub min_boundary_iou: f64,
    pub max_boundary_iou: f64,
    pub rows: Vec<EvalRow>,
}

/// Sums in value order so the mean is invariant under row permutation.
fn permutation_invariant_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Exact means and extrema over the rows; row order is preserved and the
/// statistics are permutation-invariant.
pub fn aggregate(key: ReportKey, rows: Vec<EvalRow>) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::Empty("no evaluation rows"));
    }
    let count = rows.len();
    let mut ious: Vec<f64> = rows.iter().map(|r| r.iou).collect();
    let mut boundary: Vec<f64> = rows.iter().map(|r| r.boundary_iou).collect();
    let fold = |init: f64, f: fn(f64, f64) -> f64, pick: fn(&EvalRow) -> f64| {
        rows.iter().map(pick).fold(init, f)
    };
    Ok(EvalReport {
        key,
        count,
        mean_iou: permutation_invariant_mean(&mut ious),
        min_iou: fold(f64::INFINITY, f64::min, |r| r.iou),
        max_iou: fold(f64::NEG_INFINITY, f64::max, |r| r.iou),
        mean_boundary_iou: permutation_invariant_mean(&mut boundary),
        min_boundary_iou: fold(f64::INFINITY, f64::min, |r| r.boundary_iou),
        max_boundary_iou: fold(f64::NEG_INFINITY, f64::max, |r| r.boundary_iou),
        rows,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-row CSV with a fixed header.
    pub fn rows_to_csv(&self) -> String {
        let mut out = String::from("label,iou,boundary_iou\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{}\n", row.label, row.iou, row.boundary_iou));
        }
        out
    }
}
