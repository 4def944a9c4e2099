//! Global mask codec: a whole `K×K` binary mask as one truncated DCT vector.
//!
//! Encoding transforms the mask, scans the coefficient matrix in zigzag
//! order, and keeps the leading `N` entries. Decoding zero-fills the
//! remaining coefficients, inverse-transforms, and binarizes with the strict
//! `> 0.5` rule. At `N = K²` the round trip is exact for every binary mask.

use serde::{Deserialize, Serialize};

use crate::dct::{dct2d, idct2d, zigzag_scan, zigzag_unscan};
use crate::mask::BinaryMask;
use crate::metrics;
use crate::{Error, Result};

/// Truncated zigzag coefficient sequence with its source resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct DctVector {
    resolution: usize,
    coeffs: Vec<f64>,
}

impl DctVector {
    /// Validates `1 ≤ len ≤ K²` and finiteness.
    pub fn new(resolution: usize, coeffs: Vec<f64>) -> Result<Self> {
        if resolution == 0 || resolution > crate::MAX_SIDE {
            return Err(Error::dimension(format!(
                "resolution must be in 1..={}",
                crate::MAX_SIDE
            )));
        }
        if coeffs.is_empty() || coeffs.len() > resolution * resolution {
            return Err(Error::dimension(format!(
                "vector length {} out of range 1..={}",
                coeffs.len(),
                resolution * resolution
            )));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coefficient {c}")));
        }
        Ok(DctVector { resolution, coeffs })
    }

    /// Side length of the mask this vector codes.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Number of retained coefficients.
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient `i` corresponds to zigzag position `i`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Replaces one coefficient; used by the locality experiments.
    pub fn with_coefficient(&self, index: usize, value: f64) -> Result<Self> {
        if index >= self.coeffs.len() {
            return Err(Error::dimension(format!(
                "coefficient index {index} out of range 0..{}",
                self.coeffs.len()
            )));
        }
        if !value.is_finite() {
            return Err(Error::invalid(format!("non-finite coefficient {value}")));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs[index] = value;
        Ok(DctVector {
            resolution: self.resolution,
            coeffs,
        })
    }
}

/// JSON schema: `{ "resolution": K, "dim": N, "coeffs": [f64…] }`.
#[derive(Serialize, Deserialize)]
struct VectorRecord {
    resolution: usize,
    dim: usize,
    coeffs: Vec<f64>,
}

impl DctVector {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&VectorRecord {
            resolution: self.resolution,
            dim: self.coeffs.len(),
            coeffs: self.coeffs.clone(),
        })
        .expect("vector record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: VectorRecord = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if record.dim != record.coeffs.len() {
            return Err(Error::invalid(format!(
                "declared dim {} but {} coefficients",
                record.dim,
                record.coeffs.len()
            )));
        }
        DctVector::new(record.resolution, record.coeffs)
    }
}

/// Encodes a mask into its leading `n` zigzag coefficients.
pub fn encode_mask(mask: &BinaryMask, n: usize) -> Result<DctVector> {
    let frequency = dct2d(&mask.to_matrix());
    let coeffs = zigzag_scan(&frequency, n)?;
    DctVector::new(mask.size(), coeffs)
}

/// Reconstructs a mask: zero-fill, inverse transform, strict `> 0.5`.
pub fn decode_mask(vector: &DctVector) -> BinaryMask {
    let frequency = zigzag_unscan(vector.coeffs(), vector.resolution())
        .expect("vector length validated at construction");
    BinaryMask::from_matrix(&idct2d(&frequency))
}

/// IoU between a mask and its `n`-coefficient round trip.
pub fn reconstruction_iou(mask: &BinaryMask, n: usize) -> Result<f64> {
    let decoded = decode_mask(&encode_mask(mask, n)?);
    metrics::iou(mask, &decoded)
}
