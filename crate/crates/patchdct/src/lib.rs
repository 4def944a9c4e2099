//! Patch-wise DCT mask coding and evaluation.
//!
//! A binary instance mask can be compressed into a short vector of 2-D DCT
//! coefficients and recovered by inverse transform plus thresholding. This
//! crate implements that codec at two granularities, together with the
//! machinery needed to study it at desk scale:
//!
//! - [`dct`]: orthonormal 2-D DCT-II forward/inverse transforms and the
//!   JPEG-style zigzag coefficient ordering, with a brute-force reference path.
//! - [`codec`]: the global codec, coding a whole `K×K` mask as one truncated
//!   coefficient vector.
//! - [`patch`]: the patch codec, which splits the mask into `m×m` tiles
//!   classified as foreground / background / mixed; only mixed tiles carry
//!   short coefficient vectors.
//! - [`refine`]: multi-stage oracle refinement driven by ground truth, with
//!   optional class-flip and coefficient-noise corruption.
//! - [`loss`]: the training losses as pure evaluators with analytic
//!   gradients.
//! - [`metrics`]: mask IoU and boundary IoU backed by an exact Euclidean
//!   distance transform, plus corpus aggregation.
//! - [`ingest`] and [`synth`]: COCO-style annotation parsing and
//!   rasterization, mask resizing, and seeded synthetic corpora.
//! - [`sweep`]: deterministic reconstruction-quality sweeps emitting CSV.
//!
//! All numeric kernels are pure functions of their inputs; randomized paths
//! are seeded and reproducible.

pub mod codec;
pub mod dct;
pub mod ingest;
pub mod loss;
pub mod mask;
pub mod metrics;
pub mod overlay;
pub mod patch;
pub mod pbm;
pub mod refine;
pub mod sweep;
pub mod synth;

mod error;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use mask::BinaryMask;

/// Largest accepted mask/matrix side length. Everything here is desk-scale;
/// the cap keeps untrusted size fields from demanding absurd allocations.
pub const MAX_SIDE: usize = 1 << 14;
