//! Binary `K×K` masks, the fundamental object being coded.

use serde::{Deserialize, Serialize};

use crate::dct::RealMatrix;
use crate::{Error, Result};

/// Reconstruction values strictly above this threshold binarize to 1.
///
/// The strictness matters: a constant reconstruction of exactly 0.5 (a
/// single-coefficient code of `K/2`) decodes to the all-zeros mask.
pub const BINARIZE_THRESHOLD: f64 = 0.5;

/// Square grid of `{0,1}` pixel labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    size: usize,
    pixels: Vec<u8>,
}

impl BinaryMask {
    /// All-background mask.
    pub fn zeros(size: usize) -> Self {
        assert!(size >= 1, "mask size must be at least 1");
        BinaryMask {
            size,
            pixels: vec![0; size * size],
        }
    }

    /// Constant mask, foreground when `value` is true.
    pub fn filled(size: usize, value: bool) -> Self {
        assert!(size >= 1, "mask size must be at least 1");
        BinaryMask {
            size,
            pixels: vec![u8::from(value); size * size],
        }
    }

    /// Builds from row-major labels; every element must be 0 or 1.
    pub fn from_pixels(size: usize, pixels: Vec<u8>) -> Result<Self> {
        if size == 0 || size > crate::MAX_SIDE {
            return Err(Error::dimension(format!(
                "mask size must be in 1..={}",
                crate::MAX_SIDE
            )));
        }
        if pixels.len() != size * size {
            return Err(Error::dimension(format!(
                "expected {} pixels for a {size}x{size} mask, got {}",
                size * size,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|&&p| p > 1) {
            return Err(Error::invalid(format!("pixel label {p} is not 0 or 1")));
        }
        Ok(BinaryMask { size, pixels })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.pixels[row * self.size + col] == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.pixels[row * self.size + col] = u8::from(value);
    }

    /// Row-major `{0,1}` labels.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn foreground_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    pub fn foreground_fraction(&self) -> f64 {
        self.foreground_count() as f64 / (self.size * self.size) as f64
    }

    /// Lifts the labels to a real matrix of 0.0/1.0 values.
    pub fn to_matrix(&self) -> RealMatrix {
        RealMatrix::from_values(
            self.size,
            self.pixels.iter().map(|&p| f64::from(p)).collect(),
        )
        .expect("mask labels are finite")
    }

    /// Binarizes a real matrix with the strict `> 0.5` rule.
    pub fn from_matrix(m: &RealMatrix) -> Self {
        BinaryMask {
            size: m.size(),
            pixels: m
                .values()
                .iter()
                .map(|&v| u8::from(v > BINARIZE_THRESHOLD))
                .collect(),
        }
    }

    /// Pixels that differ between two same-sized masks, as `(row, col)`.
    pub fn diff_pixels(&self, other: &BinaryMask) -> Result<Vec<(usize, usize)>> {
        if self.size != other.size {
            return Err(Error::dimension(format!(
                "mask sizes differ: {} vs {}",
                self.size, other.size
            )));
        }
        Ok(self
            .pixels
            .iter()
            .zip(&other.pixels)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| (i / self.size, i % self.size))
            .collect())
    }
}

/// Compact JSON form: one string of `0`/`1` characters per row.
#[derive(Serialize, Deserialize)]
struct MaskRepr {
    size: usize,
    rows: Vec<String>,
}

impl Serialize for BinaryMask {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let rows = self
            .pixels
            .chunks(self.size)
            .map(|row| {
                row.iter()
                    .map(|&p| if p == 1 { '1' } else { '0' })
                    .collect()
            })
            .collect();
        MaskRepr {
            size: self.size,
            rows,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BinaryMask {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let repr = MaskRepr::deserialize(deserializer)?;
        if repr.rows.len() != repr.size {
            return Err(DeError::custom(format!(
                "expected {} rows, got {}",
                repr.size,
                repr.rows.len()
            )));
        }
        let mut pixels = Vec::with_capacity(repr.size * repr.size);
        for row in &repr.rows {
            if row.len() != repr.size {
                return Err(DeError::custom(format!(
                    "expected row of length {}, got {}",
                    repr.size,
                    row.len()
                )));
            }
            for ch in row.chars() {
                match ch {
                    '0' => pixels.push(0),
                    '1' => pixels.push(1),
                    other => return Err(DeError::custom(format!("bad pixel char {other:?}"))),
                }
            }
        }
        BinaryMask::from_pixels(repr.size, pixels).map_err(DeError::custom)
    }
}
