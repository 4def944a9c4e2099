//! COCO-style annotation ingestion and mask preparation.
//!
//! Annotations arrive as a JSON document with an `"annotations"` array;
//! each record carries a bounding box and either polygon segmentation (flat
//! `[x, y, x, y, …]` rings) or uncompressed RLE (column-major counts
//! starting with a background run). Records are validated individually: a
//! malformed document is a parse error, a bad record is reported alongside
//! the surviving ones.
//!
//! Rasterization crops the segmentation to its bounding box and scan
//! converts onto a `K×K` grid. Polygons fill with the even-odd rule sampled
//! at pixel centers; a record with several rings takes their union. RLE
//! decodes at image scale, crops, and area-resamples.

use serde::{Deserialize, Serialize};

use crate::mask::{BinaryMask, BINARIZE_THRESHOLD};
use crate::{Error, Result};

/// Axis-aligned box in image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// Segmentation payload of one instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Segmentation {
    /// One or more polygon rings, each a flat `x,y` sequence.
    Polygons(Vec<Vec<f64>>),
    /// Uncompressed RLE over the full image, column-major, starting with a
    /// background run. `size` is `[height, width]`.
    Rle { size: [u32; 2], counts: Vec<u32> },
}

/// One validated instance annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub id: u64,
    pub category_id: u64,
    pub bbox: BoundingBox,
    pub segmentation: Segmentation,
}

/// A record that failed validation; the rest of the document is unaffected.
#[derive(Debug, Clone)]
pub struct RecordError {
    /// Position in the `annotations` array.
    pub index: usize,
    pub message: String,
}

/// Parse result: surviving records plus per-record failures.
#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub records: Vec<InstanceRecord>,
    pub record_errors: Vec<RecordError>,
}

#[derive(Deserialize)]
struct RawDocument {
    annotations: Vec<RawAnnotation>,
}

#[derive(Serialize, Deserialize)]
struct RawAnnotation {
    #[serde(default)]
    id: u64,
    #[serde(default)]
    category_id: u64,
    bbox: [f64; 4],
    segmentation: RawSegmentation,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawSegmentation {
    Polygons(Vec<Vec<f64>>),
    Rle {
        size: [u32; 2],
        counts: Vec<u32>,
    },
    /// COCO's compressed string form; recognized so it can be rejected with
    /// a record-level message instead of a document parse error.
    CompressedRle {
        size: [u32; 2],
        counts: String,
    },
}

fn validate_record(
    index: usize,
    raw: RawAnnotation,
) -> std::result::Result<InstanceRecord, RecordError> {
    let fail = |message: String| RecordError { index, message };
    let [x, y, w, h] = raw.bbox;
    if ![x, y, w, h].iter().all(|v| v.is_finite()) || w <= 0.0 || h <= 0.0 {
        return Err(fail(format!(
            "bbox [{x}, {y}, {w}, {h}] has no positive area"
        )));
    }
    let segmentation = match raw.segmentation {
        RawSegmentation::Polygons(rings) => {
            if rings.is_empty() {
                return Err(fail("polygon list is empty".to_string()));
            }
            for (ri, ring) in rings.iter().enumerate() {
                if ring.len() < 6 || ring.len() % 2 != 0 {
                    return Err(fail(format!(
                        "ring {ri} has {} coordinates; need an even count of at least 6",
                        ring.len()
                    )));
                }
                if ring.iter().any(|v| !v.is_finite()) {
                    return Err(fail(format!("ring {ri} holds a non-finite coordinate")));
                }
            }
            Segmentation::Polygons(rings)
        }
        RawSegmentation::Rle { size, counts } => {
            let [h_img, w_img] = size;
            if h_img == 0 || w_img == 0 {
                return Err(fail(format!("RLE size {size:?} is degenerate")));
            }
            // Decoding materializes h·w cells; bound it so untrusted
            // documents cannot demand absurd allocations.
            const MAX_RLE_CELLS: u64 = 1 << 26;
            let cells = u64::from(h_img) * u64::from(w_img);
            if cells > MAX_RLE_CELLS {
                return Err(fail(format!(
                    "RLE size {size:?} covers {cells} cells, above the {MAX_RLE_CELLS} limit"
                )));
            }
            let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
            if total != cells {
                return Err(fail(format!("RLE counts sum to {total}, expected {cells}")));
            }
            Segmentation::Rle { size, counts }
        }
        RawSegmentation::CompressedRle { .. } => {
            return Err(fail("compressed RLE strings are not supported".to_string()));
        }
    };
    Ok(InstanceRecord {
        id: raw.id,
        category_id: raw.category_id,
        bbox: BoundingBox { x, y, w, h },
        segmentation,
    })
}

/// Parses an annotation document. Unknown fields are ignored; invalid
/// records are reported per index without poisoning the rest.
pub fn parse_annotations(text: &str) -> Result<ParseOutcome> {
    let raw: RawDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut records = Vec::new();
    let mut record_errors = Vec::new();
    for (index, annotation) in raw.annotations.into_iter().enumerate() {
        match validate_record(index, annotation) {
            Ok(record) => records.push(record),
            Err(err) => record_errors.push(err),
        }
    }
    Ok(ParseOutcome {
        records,
        record_errors,
    })
}

/// Serializes records back to the document schema accepted by
/// [`parse_annotations`]; reparsing yields equal records.
pub fn serialize_annotations(records: &[InstanceRecord]) -> String {
    let annotations: Vec<RawAnnotation> = records
        .iter()
        .map(|record| RawAnnotation {
            id: record.id,
            category_id: record.category_id,
            bbox: [record.bbox.x, record.bbox.y, record.bbox.w, record.bbox.h],
            segmentation: match &record.segmentation {
                Segmentation::Polygons(rings) => RawSegmentation::Polygons(rings.clone()),
                Segmentation::Rle { size, counts } => RawSegmentation::Rle {
                    size: *size,
                    counts: counts.clone(),
                },
            },
        })
        .collect();
    serde_json::to_string(&serde_json::json!({ "annotations": annotations }))
        .expect("annotation document serializes")
}

/// Even-odd scanline fill sampled at pixel centers, in crop coordinates
/// (the box maps to `[0, K] × [0, K]`).
fn fill_ring(points: &[(f64, f64)], k: usize, mask: &mut BinaryMask) {
    let mut crossings: Vec<f64> = Vec::new();
    for row in 0..k {
        let yc = row as f64 + 0.5;
        crossings.clear();
        for i in 0..points.len() {
            let (x1, y1) = points[i];
            let (x2, y2) = points[(i + 1) % points.len()];
            if y1 == y2 {
                continue;
            }
            // Half-open span so shared vertices count once.
            if (y1 <= yc && yc < y2) || (y2 <= yc && yc < y1) {
                let x = x1 + (yc - y1) * (x2 - x1) / (y2 - y1);
                // Degenerate coordinates can overflow; such edges cannot
                // cross the grid anyway.
                if x.is_finite() {
                    crossings.push(x);
                }
            }
        }
        crossings.sort_by(f64::total_cmp);
        for col in 0..k {
            let xc = col as f64 + 0.5;
            let left = crossings.iter().filter(|&&x| x < xc).count();
            if left % 2 == 1 {
                mask.set(row, col, true);
            }
        }
    }
}

/// Exact area-average resample of a rectangular `{0,1}` grid onto `K×K`,
/// binarized with the strict `> 0.5` rule.
fn area_resample(pixels: &[u8], src_h: usize, src_w: usize, k: usize) -> BinaryMask {
    let mut out = BinaryMask::zeros(k);
    let row_scale = src_h as f64 / k as f64;
    let col_scale = src_w as f64 / k as f64;
    for r in 0..k {
        let y0 = r as f64 * row_scale;
        let y1 = (r + 1) as f64 * row_scale;
        for c in 0..k {
            let x0 = c as f64 * col_scale;
            let x1 = (c + 1) as f64 * col_scale;
            let mut covered = 0.0;
            let r_lo = y0.floor() as usize;
            let r_hi = (y1.ceil() as usize).min(src_h);
            let c_lo = x0.floor() as usize;
            let c_hi = (x1.ceil() as usize).min(src_w);
            for sr in r_lo..r_hi {
                let oy = (y1.min((sr + 1) as f64) - y0.max(sr as f64)).max(0.0);
                if oy == 0.0 {
                    continue;
                }
                for sc in c_lo..c_hi {
                    if pixels[sr * src_w + sc] == 1 {
                        let ox = (x1.min((sc + 1) as f64) - x0.max(sc as f64)).max(0.0);
                        covered += oy * ox;
                    }
                }
            }
            let mean = covered / (row_scale * col_scale);
            if mean > BINARIZE_THRESHOLD {
                out.set(r, c, true);
            }
        }
    }
    out
}

/// Crops a record's segmentation to its bounding box and scan-converts it
/// onto a `K×K` grid.
pub fn rasterize(record: &InstanceRecord, k: usize) -> Result<BinaryMask> {
    if k == 0 || k > crate::MAX_SIDE {
        return Err(Error::dimension(format!(
            "target size must be in 1..={}",
            crate::MAX_SIDE
        )));
    }
    let b = record.bbox;
    if b.w <= 0.0 || b.h <= 0.0 {
        return Err(Error::invalid(format!(
            "bbox [{}, {}, {}, {}] has no positive area",
            b.x, b.y, b.w, b.h
        )));
    }
    match &record.segmentation {
        Segmentation::Polygons(rings) => {
            let mut mask = BinaryMask::zeros(k);
            for ring in rings {
                let points: Vec<(f64, f64)> = ring
                    .chunks(2)
                    .map(|p| ((p[0] - b.x) * k as f64 / b.w, (p[1] - b.y) * k as f64 / b.h))
                    .collect();
                fill_ring(&points, k, &mut mask);
            }
            Ok(mask)
        }
        Segmentation::Rle { size, counts } => {
            let (h_img, w_img) = (size[0] as usize, size[1] as usize);
            // Decode column-major runs, alternating background/foreground.
            let mut flat = vec![0u8; h_img * w_img];
            let mut pos = 0usize;
            let mut value = 0u8;
            for &count in counts {
                let end = (pos + count as usize).min(flat.len());
                if value == 1 {
                    for cell in &mut flat[pos..end] {
                        *cell = 1;
                    }
                }
                pos = end;
                value = 1 - value;
            }
            // Integer crop window, clipped to the image.
            let x0 = (b.x.round().max(0.0) as usize).min(w_img.saturating_sub(1));
            let y0 = (b.y.round().max(0.0) as usize).min(h_img.saturating_sub(1));
            let x1 = ((b.x + b.w).round() as usize).clamp(x0 + 1, w_img);
            let y1 = ((b.y + b.h).round() as usize).clamp(y0 + 1, h_img);
            let (crop_h, crop_w) = (y1 - y0, x1 - x0);
            let mut crop = vec![0u8; crop_h * crop_w];
            for r in 0..crop_h {
                for c in 0..crop_w {
                    // Column-major image index.
                    crop[r * crop_w + c] = flat[(x0 + c) * h_img + (y0 + r)];
                }
            }
            Ok(area_resample(&crop, crop_h, crop_w, k))
        }
    }
}

/// Area-average resample of a square mask to a new side length, binarized
/// with the strict `> 0.5` rule. Identity when the sizes match.
pub fn resize_mask(mask: &BinaryMask, target: usize) -> Result<BinaryMask> {
    if target == 0 || target > crate::MAX_SIDE {
        return Err(Error::dimension(format!(
            "target size must be in 1..={}",
            crate::MAX_SIDE
        )));
    }
    if target == mask.size() {
        return Ok(mask.clone());
    }
    Ok(area_resample(
        mask.pixels(),
        mask.size(),
        mask.size(),
        target,
    ))
}
