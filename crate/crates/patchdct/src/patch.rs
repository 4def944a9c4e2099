//! Patch codec: `m×m` tiling, three-class patch taxonomy, per-patch
//! coefficient vectors, and reassembly.
//!
//! A patch containing only foreground pixels is a foreground patch, one with
//! only background pixels a background patch, and everything else is mixed.
//! Pure patches are represented by their class alone, since an all-ones patch
//! transforms to a single DC entry equal to the patch size and an all-zeros
//! patch to the zero matrix; only mixed patches carry vectors. Tiles are
//! disjoint, which makes per-patch edits strictly local to their window.

use serde::{Deserialize, Serialize};

use crate::codec::{decode_mask, encode_mask, DctVector};
use crate::mask::BinaryMask;
use crate::{Error, Result};

/// Exhaustive patch taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatchClass {
    #[serde(rename = "bg")]
    Background,
    #[serde(rename = "fg")]
    Foreground,
    #[serde(rename = "mixed")]
    Mixed,
}

/// One tile of a [`PatchGrid`]; `vector` is present exactly when the class
/// is mixed.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchRecord {
    pub class: PatchClass,
    pub vector: Option<DctVector>,
}

/// Row-major lattice of patch records for one mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    mask_size: usize,
    patch_size: usize,
    vector_dim: usize,
    patches: Vec<PatchRecord>,
}

impl PatchGrid {
    /// Validates the grid shape and the class/vector contract.
    pub fn new(
        mask_size: usize,
        patch_size: usize,
        vector_dim: usize,
        patches: Vec<PatchRecord>,
    ) -> Result<Self> {
        check_patch_size(mask_size, patch_size)?;
        if vector_dim == 0 || vector_dim > patch_size * patch_size {
            return Err(Error::dimension(format!(
                "patch vector length {vector_dim} out of range 1..={}",
                patch_size * patch_size
            )));
        }
        let per_side = mask_size / patch_size;
        if patches.len() != per_side * per_side {
            return Err(Error::dimension(format!(
                "expected {} patches, got {}",
                per_side * per_side,
                patches.len()
            )));
        }
        for (i, patch) in patches.iter().enumerate() {
            match (&patch.class, &patch.vector) {
                (PatchClass::Mixed, Some(v)) => {
                    if v.resolution() != patch_size || v.dim() != vector_dim {
                        return Err(Error::dimension(format!(
                            "patch {i}: vector is {}-dim at resolution {}, grid wants {vector_dim}-dim at {patch_size}",
                            v.dim(),
                            v.resolution()
                        )));
                    }
                }
                (PatchClass::Mixed, None) => {
                    return Err(Error::PatchClass(format!(
                        "patch {i} is mixed but carries no vector"
                    )))
                }
                (_, Some(_)) => {
                    return Err(Error::PatchClass(format!(
                        "patch {i} is pure but carries a vector"
                    )))
                }
                (_, None) => {}
            }
        }
        Ok(PatchGrid {
            mask_size,
            patch_size,
            vector_dim,
            patches,
        })
    }

    pub fn mask_size(&self) -> usize {
        self.mask_size
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn vector_dim(&self) -> usize {
        self.vector_dim
    }

    /// Patches per side, `K/m`.
    pub fn per_side(&self) -> usize {
        self.mask_size / self.patch_size
    }

    pub fn patches(&self) -> &[PatchRecord] {
        &self.patches
    }

    pub fn count(&self, class: PatchClass) -> usize {
        self.patches.iter().filter(|p| p.class == class).count()
    }

    /// Replaces the vector of one mixed patch.
    pub fn with_patch_vector(&self, index: usize, vector: DctVector) -> Result<Self> {
        let record = self
            .patches
            .get(index)
            .ok_or_else(|| Error::dimension(format!("patch index {index} out of range")))?;
        if record.class != PatchClass::Mixed {
            return Err(Error::PatchClass(format!(
                "patch {index} is not mixed; only mixed patches carry vectors"
            )));
        }
        let mut patches = self.patches.clone();
        patches[index] = PatchRecord {
            class: PatchClass::Mixed,
            vector: Some(vector),
        };
        PatchGrid::new(self.mask_size, self.patch_size, self.vector_dim, patches)
    }
}

fn check_patch_size(mask_size: usize, patch_size: usize) -> Result<()> {
    if mask_size == 0 || mask_size > crate::MAX_SIDE {
        return Err(Error::dimension(format!(
            "mask size must be in 1..={}",
            crate::MAX_SIDE
        )));
    }
    if patch_size == 0 || patch_size > mask_size || !mask_size.is_multiple_of(patch_size) {
        return Err(Error::config(format!(
            "patch size {patch_size} does not divide mask size {mask_size}"
        )));
    }
    Ok(())
}

/// Splits a mask into `(K/m)²` non-overlapping `m×m` tiles, row-major.
pub fn partition(mask: &BinaryMask, patch_size: usize) -> Result<Vec<BinaryMask>> {
    check_patch_size(mask.size(), patch_size)?;
    let per_side = mask.size() / patch_size;
    let mut tiles = Vec::with_capacity(per_side * per_side);
    for tile_row in 0..per_side {
        for tile_col in 0..per_side {
            let mut tile = BinaryMask::zeros(patch_size);
            for r in 0..patch_size {
                for c in 0..patch_size {
                    tile.set(
                        r,
                        c,
                        mask.get(tile_row * patch_size + r, tile_col * patch_size + c),
                    );
                }
            }
            tiles.push(tile);
        }
    }
    Ok(tiles)
}

/// Foreground iff all pixels are 1, background iff all 0, mixed otherwise.
pub fn classify_patch(patch: &BinaryMask) -> PatchClass {
    let ones = patch.foreground_count();
    if ones == 0 {
        PatchClass::Background
    } else if ones == patch.size() * patch.size() {
        PatchClass::Foreground
    } else {
        PatchClass::Mixed
    }
}

/// Encodes a mixed patch into its leading `n` coefficients.
///
/// Pure patches are rejected: they are represented by their class, and the
/// vector route is reserved for mixed patches.
pub fn encode_patch(patch: &BinaryMask, n: usize) -> Result<DctVector> {
    let class = classify_patch(patch);
    if class != PatchClass::Mixed {
        return Err(Error::PatchClass(format!(
            "cannot encode a {class:?} patch; only mixed patches are coded"
        )));
    }
    encode_mask(patch, n)
}

/// Reconstructs one tile from its class (and, for mixed, its vector).
pub fn decode_patch(
    class: PatchClass,
    vector: Option<&DctVector>,
    patch_size: usize,
) -> Result<BinaryMask> {
    match (class, vector) {
        (PatchClass::Foreground, None) => Ok(BinaryMask::filled(patch_size, true)),
        (PatchClass::Background, None) => Ok(BinaryMask::zeros(patch_size)),
        (PatchClass::Mixed, Some(v)) => {
            if v.resolution() != patch_size {
                return Err(Error::dimension(format!(
                    "vector resolution {} does not match patch size {patch_size}",
                    v.resolution()
                )));
            }
            Ok(decode_mask(v))
        }
        (PatchClass::Mixed, None) => Err(Error::PatchClass(
            "mixed patch requires a vector".to_string(),
        )),
        (_, Some(_)) => Err(Error::PatchClass(
            "pure patch must not carry a vector".to_string(),
        )),
    }
}

/// Classifies and encodes every tile of `mask` into a grid.
pub fn encode_grid(mask: &BinaryMask, patch_size: usize, vector_dim: usize) -> Result<PatchGrid> {
    let tiles = partition(mask, patch_size)?;
    let mut patches = Vec::with_capacity(tiles.len());
    for tile in &tiles {
        let class = classify_patch(tile);
        let vector = match class {
            PatchClass::Mixed => Some(encode_patch(tile, vector_dim)?),
            _ => None,
        };
        patches.push(PatchRecord { class, vector });
    }
    PatchGrid::new(mask.size(), patch_size, vector_dim, patches)
}

/// Decodes every patch and tiles the results back into a `K×K` mask.
pub fn assemble(grid: &PatchGrid) -> BinaryMask {
    let m = grid.patch_size();
    let per_side = grid.per_side();
    let mut mask = BinaryMask::zeros(grid.mask_size());
    for (index, record) in grid.patches().iter().enumerate() {
        let tile = decode_patch(record.class, record.vector.as_ref(), m)
            .expect("grid construction enforces the class/vector contract");
        let tile_row = index / per_side;
        let tile_col = index % per_side;
        for r in 0..m {
            for c in 0..m {
                mask.set(tile_row * m + r, tile_col * m + c, tile.get(r, c));
            }
        }
    }
    mask
}

/// JSON schema: `{ "K":…, "m":…, "n":…, "patches":[{"class":…, "coeffs":…?}] }`.
#[derive(Serialize, Deserialize)]
struct GridRecord {
    #[serde(rename = "K")]
    mask_size: usize,
    #[serde(rename = "m")]
    patch_size: usize,
    #[serde(rename = "n")]
    vector_dim: usize,
    patches: Vec<GridPatchRecord>,
}

#[derive(Serialize, Deserialize)]
struct GridPatchRecord {
    class: PatchClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    coeffs: Option<Vec<f64>>,
}

impl PatchGrid {
    pub fn to_json(&self) -> String {
        let record = GridRecord {
            mask_size: self.mask_size,
            patch_size: self.patch_size,
            vector_dim: self.vector_dim,
            patches: self
                .patches
                .iter()
                .map(|p| GridPatchRecord {
                    class: p.class,
                    coeffs: p.vector.as_ref().map(|v| v.coeffs().to_vec()),
                })
                .collect(),
        };
        serde_json::to_string(&record).expect("grid record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: GridRecord = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let patches = record
            .patches
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let vector = match p.coeffs {
                    Some(coeffs) => Some(
                        DctVector::new(record.patch_size, coeffs)
                            .map_err(|e| Error::invalid(format!("patch {i}: {e}")))?,
                    ),
                    None => None,
                };
                Ok(PatchRecord {
                    class: p.class,
                    vector,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PatchGrid::new(
            record.mask_size,
            record.patch_size,
            record.vector_dim,
            patches,
        )
    }
}

/// Per-class, per-position coefficient distributions over a corpus.
///
/// Every patch of every mask contributes its leading `n` coefficients to the
/// histograms of its class, making the class-conditional structure visible:
/// foreground mass sits at `m` (position 0) and 0 elsewhere, background mass
/// at 0, mixed positions spread continuously.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientStats {
    pub patch_size: usize,
    pub vector_dim: usize,
    pub foreground: ClassStats,
    pub background: ClassStats,
    pub mixed: ClassStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassStats {
    /// Number of patches of this class seen.
    pub patches: u64,
    /// One entry per coefficient position.
    pub positions: Vec<PositionStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositionStats {
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub histogram: Histogram,
}

/// Fixed-range histogram; samples outside the range clamp into the end bins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bins: Vec<u64>,
}

impl Histogram {
    fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram {
            lo,
            hi,
            bins: vec![0; bins],
        }
    }

    fn add(&mut self, value: f64) {
        let n = self.bins.len();
        let t = (value - self.lo) / (self.hi - self.lo);
        let idx = ((t * n as f64).floor() as i64).clamp(0, n as i64 - 1) as usize;
        self.bins[idx] += 1;
    }

    /// Number of bins holding at least one sample.
    pub fn occupied(&self) -> usize {
        self.bins.iter().filter(|&&b| b > 0).count()
    }
}

const HISTOGRAM_BINS: usize = 64;

struct StatsAccumulator {
    patches: u64,
    sums: Vec<f64>,
    mins: Vec<f64>,
    maxs: Vec<f64>,
    histograms: Vec<Histogram>,
}

impl StatsAccumulator {
    fn new(n: usize, patch_size: usize) -> Self {
        // Coefficients of an m×m binary patch live within ±2m.
        let bound = 2.0 * patch_size as f64;
        StatsAccumulator {
            patches: 0,
            sums: vec![0.0; n],
            mins: vec![f64::INFINITY; n],
            maxs: vec![f64::NEG_INFINITY; n],
            histograms: (0..n)
                .map(|_| Histogram::new(-bound, bound, HISTOGRAM_BINS))
                .collect(),
        }
    }

    fn add(&mut self, coeffs: &[f64]) {
        self.patches += 1;
        for (i, &c) in coeffs.iter().enumerate() {
            self.sums[i] += c;
            self.mins[i] = self.mins[i].min(c);
            self.maxs[i] = self.maxs[i].max(c);
            self.histograms[i].add(c);
        }
    }

    fn finish(self) -> ClassStats {
        let count = self.patches;
        let positions = self
            .sums
            .into_iter()
            .zip(self.mins)
            .zip(self.maxs)
            .zip(self.histograms)
            .map(|(((sum, min), max), histogram)| PositionStats {
                count,
                min: if count == 0 { 0.0 } else { min },
                max: if count == 0 { 0.0 } else { max },
                mean: if count == 0 { 0.0 } else { sum / count as f64 },
                histogram,
            })
            .collect();
        ClassStats {
            patches: count,
            positions,
        }
    }
}

/// Computes coefficient distributions per class over a mask corpus.
pub fn coefficient_stats(
    corpus: &[BinaryMask],
    patch_size: usize,
    vector_dim: usize,
) -> Result<CoefficientStats> {
    if corpus.is_empty() {
        return Err(Error::Empty("coefficient stats need at least one mask"));
    }
    if vector_dim == 0 || vector_dim > patch_size * patch_size {
        return Err(Error::dimension(format!(
            "patch vector length {vector_dim} out of range 1..={}",
            patch_size * patch_size
        )));
    }
    let mut fg = StatsAccumulator::new(vector_dim, patch_size);
    let mut bg = StatsAccumulator::new(vector_dim, patch_size);
    let mut mixed = StatsAccumulator::new(vector_dim, patch_size);
    for mask in corpus {
        for tile in partition(mask, patch_size)? {
            let coeffs = encode_mask(&tile, vector_dim)?;
            match classify_patch(&tile) {
                PatchClass::Foreground => fg.add(coeffs.coeffs()),
                PatchClass::Background => bg.add(coeffs.coeffs()),
                PatchClass::Mixed => mixed.add(coeffs.coeffs()),
            }
        }
    }
    Ok(CoefficientStats {
        patch_size,
        vector_dim,
        foreground: fg.finish(),
        background: bg.finish(),
        mixed: mixed.finish(),
    })
}
