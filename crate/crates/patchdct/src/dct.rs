//! Orthonormal 2-D DCT-II transforms and zigzag coefficient ordering.
//!
//! The forward transform of a `K×K` matrix `M` is
//!
//! ```text
//! F(u,v) = (2/K) C(u) C(v) Σ_x Σ_y M(x,y) cos((2x+1)uπ/2K) cos((2y+1)vπ/2K)
//! ```
//!
//! with `C(0) = 1/√2` and `C(w) = 1` otherwise. With the basis rows
//! `B(u,x) = √(2/K) C(u) cos((2x+1)uπ/2K)` this is `F = B·M·Bᵀ`, `B` is
//! orthonormal, and the inverse is `M = Bᵀ·F·B`. [`dct2d`] and [`idct2d`]
//! use the separable form with a per-size cached basis; [`dct2d_naive`]
//! evaluates the quadruple sum literally and serves as the reference path.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::{Error, Result};

/// Square matrix of finite `f64` values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    size: usize,
    values: Vec<f64>,
}

impl RealMatrix {
    /// All-zeros matrix of side `size`.
    pub fn zeros(size: usize) -> Self {
        assert!(size >= 1, "matrix size must be at least 1");
        RealMatrix {
            size,
            values: vec![0.0; size * size],
        }
    }

    /// Builds from row-major values; rejects wrong lengths and non-finite
    /// entries.
    pub fn from_values(size: usize, values: Vec<f64>) -> Result<Self> {
        if size == 0 || size > crate::MAX_SIDE {
            return Err(Error::dimension(format!(
                "matrix size must be in 1..={}",
                crate::MAX_SIDE
            )));
        }
        if values.len() != size * size {
            return Err(Error::dimension(format!(
                "expected {} values for a {size}x{size} matrix, got {}",
                size * size,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite matrix entry {v}")));
        }
        Ok(RealMatrix { size, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.size + col] = value;
    }

    /// Row-major backing slice.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Orthonormal cosine basis for one transform size.
///
/// `entry(u, x) = √(2/K) C(u) cos((2x+1)uπ/2K)`; rows are mutually
/// orthonormal.
#[derive(Debug)]
pub struct CosineBasis {
    size: usize,
    rows: Vec<f64>, // rows[u * size + x]
}

impl CosineBasis {
    fn new(size: usize) -> Self {
        let k = size as f64;
        let scale = (2.0 / k).sqrt();
        let mut rows = vec![0.0; size * size];
        for u in 0..size {
            let cu = if u == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
            for x in 0..size {
                let angle = (2 * x + 1) as f64 * u as f64 * PI / (2.0 * k);
                rows[u * size + x] = scale * cu * angle.cos();
            }
        }
        CosineBasis { size, rows }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn entry(&self, u: usize, x: usize) -> f64 {
        self.rows[u * self.size + x]
    }

    /// `B·M·Bᵀ`.
    fn forward(&self, m: &RealMatrix) -> RealMatrix {
        let k = self.size;
        // tmp = B·M
        let mut tmp = vec![0.0; k * k];
        for u in 0..k {
            for y in 0..k {
                let mut acc = 0.0;
                for x in 0..k {
                    acc += self.rows[u * k + x] * m.values[x * k + y];
                }
                tmp[u * k + y] = acc;
            }
        }
        // out = tmp·Bᵀ
        let mut out = RealMatrix::zeros(k);
        for u in 0..k {
            for v in 0..k {
                let mut acc = 0.0;
                for y in 0..k {
                    acc += tmp[u * k + y] * self.rows[v * k + y];
                }
                out.values[u * k + v] = acc;
            }
        }
        out
    }

    /// `Bᵀ·F·B`.
    fn inverse(&self, f: &RealMatrix) -> RealMatrix {
        let k = self.size;
        // tmp = Bᵀ·F
        let mut tmp = vec![0.0; k * k];
        for x in 0..k {
            for v in 0..k {
                let mut acc = 0.0;
                for u in 0..k {
                    acc += self.rows[u * k + x] * f.values[u * k + v];
                }
                tmp[x * k + v] = acc;
            }
        }
        // out = tmp·B
        let mut out = RealMatrix::zeros(k);
        for x in 0..k {
            for y in 0..k {
                let mut acc = 0.0;
                for v in 0..k {
                    acc += tmp[x * k + v] * self.rows[v * k + y];
                }
                out.values[x * k + y] = acc;
            }
        }
        out
    }
}

/// Shared per-size basis cache. Initialization is idempotent and the map is
/// only ever extended, so concurrent lookups are safe.
fn basis(size: usize) -> Arc<CosineBasis> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<CosineBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("basis cache poisoned");
    Arc::clone(
        map.entry(size)
            .or_insert_with(|| Arc::new(CosineBasis::new(size))),
    )
}

/// Forward orthonormal 2-D DCT-II, computed separably.
pub fn dct2d(m: &RealMatrix) -> RealMatrix {
    basis(m.size()).forward(m)
}

/// Inverse of [`dct2d`]; `idct2d(dct2d(m))` recovers `m` to ~1e-9.
pub fn idct2d(f: &RealMatrix) -> RealMatrix {
    basis(f.size()).inverse(f)
}

/// Largest size accepted by [`dct2d_naive`]. The literal quadruple sum is
/// O(K⁴) and exists only as a reference path.
pub const MAX_NAIVE_SIZE: usize = 64;

/// Literal quadruple-sum evaluation of the forward transform.
///
/// Independent of the separable path and its basis cache; used as the test
/// oracle. Rejects sizes above [`MAX_NAIVE_SIZE`].
pub fn dct2d_naive(m: &RealMatrix) -> Result<RealMatrix> {
    let k = m.size();
    if k > MAX_NAIVE_SIZE {
        return Err(Error::config(format!(
            "naive transform limited to size {MAX_NAIVE_SIZE}, got {k}"
        )));
    }
    let kf = k as f64;
    let mut out = RealMatrix::zeros(k);
    for u in 0..k {
        let cu = if u == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
        for v in 0..k {
            let cv = if v == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
            let mut acc = 0.0;
            for x in 0..k {
                let cos_x = ((2 * x + 1) as f64 * u as f64 * PI / (2.0 * kf)).cos();
                for y in 0..k {
                    let cos_y = ((2 * y + 1) as f64 * v as f64 * PI / (2.0 * kf)).cos();
                    acc += m.get(x, y) * cos_x * cos_y;
                }
            }
            out.set(u, v, 2.0 / kf * cu * cv * acc);
        }
    }
    Ok(out)
}

/// Serpentine anti-diagonal traversal of a `K×K` index grid.
///
/// JPEG convention: the walk starts at `(0,0)` and the first step moves
/// right, so the order begins `(0,0), (0,1), (1,0)`. Odd anti-diagonals are
/// walked downward (row increasing), even ones upward.
#[derive(Debug, Clone)]
pub struct ZigzagOrder {
    size: usize,
    pairs: Vec<(usize, usize)>,
}

impl ZigzagOrder {
    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "zigzag size must be at least 1");
        let mut pairs = Vec::with_capacity(size * size);
        for diag in 0..(2 * size - 1) {
            let lo = diag.saturating_sub(size - 1);
            let hi = diag.min(size - 1);
            if diag % 2 == 0 {
                for row in (lo..=hi).rev() {
                    pairs.push((row, diag - row));
                }
            } else {
                for row in lo..=hi {
                    pairs.push((row, diag - row));
                }
            }
        }
        ZigzagOrder { size, pairs }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// The full permutation of `(row, col)` pairs, length `K²`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// First `n` entries of `f` in zigzag order.
pub fn zigzag_scan(f: &RealMatrix, n: usize) -> Result<Vec<f64>> {
    let k = f.size();
    if n == 0 || n > k * k {
        return Err(Error::dimension(format!(
            "zigzag length {n} out of range 1..={}",
            k * k
        )));
    }
    let order = ZigzagOrder::new(k);
    Ok(order.pairs()[..n]
        .iter()
        .map(|&(r, c)| f.get(r, c))
        .collect())
}

/// Places `coeffs` back in zigzag order, zero-filling the rest.
pub fn zigzag_unscan(coeffs: &[f64], size: usize) -> Result<RealMatrix> {
    if size == 0 || size > crate::MAX_SIDE {
        return Err(Error::dimension(format!(
            "matrix size must be in 1..={}",
            crate::MAX_SIDE
        )));
    }
    if coeffs.len() > size * size {
        return Err(Error::dimension(format!(
            "{} coefficients exceed a {size}x{size} matrix",
            coeffs.len()
        )));
    }
    let order = ZigzagOrder::new(size);
    let mut out = RealMatrix::zeros(size);
    for (&value, &(r, c)) in coeffs.iter().zip(order.pairs()) {
        out.set(r, c, value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(k: usize, seed: u64) -> RealMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        RealMatrix::from_values(k, values).unwrap()
    }

    fn max_abs_diff(a: &RealMatrix, b: &RealMatrix) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Independent zigzag oracle: the classic stepping walk (move right or
    /// down at the edges, otherwise follow the anti-diagonal).
    fn zigzag_walk(k: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(k * k);
        let (mut r, mut c) = (0usize, 0usize);
        let mut upward = true;
        loop {
            out.push((r, c));
            if out.len() == k * k {
                break;
            }
            if upward {
                if c == k - 1 {
                    r += 1;
                    upward = false;
                } else if r == 0 {
                    c += 1;
                    upward = false;
                } else {
                    r -= 1;
                    c += 1;
                }
            } else if r == k - 1 {
                c += 1;
                upward = true;
            } else if c == 0 {
                r += 1;
                upward = true;
            } else {
                r += 1;
                c -= 1;
            }
        }
        out
    }

    #[test]
    fn basis_rows_are_orthonormal() {
        for k in [1, 2, 3, 8, 17, 64, 128] {
            let b = CosineBasis::new(k);
            for i in 0..k {
                for j in 0..k {
                    let dot: f64 = (0..k).map(|x| b.entry(i, x) * b.entry(j, x)).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (dot - expect).abs() < 1e-9,
                        "size {k}: rows {i},{j} dot {dot}"
                    );
                }
            }
        }
    }

    #[test]
    fn all_ones_2x2_transforms_to_dc_only() {
        let m = RealMatrix::from_values(2, vec![1.0; 4]).unwrap();
        let f = dct2d(&m);
        let expect = [2.0, 0.0, 0.0, 0.0];
        for (got, want) in f.values().iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn zeros_transform_to_zeros() {
        let f = dct2d(&RealMatrix::zeros(16));
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_2x2_is_fixed_by_the_transform() {
        // Hand evaluation of the double sum: F(0,0) = F(1,1) = 1, off-diagonal
        // terms cancel.
        let m = RealMatrix::from_values(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let f = dct2d_naive(&m).unwrap();
        let expect = [1.0, 0.0, 0.0, 1.0];
        for (got, want) in f.values().iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn naive_1x1_is_identity() {
        let m = RealMatrix::from_values(1, vec![1.0]).unwrap();
        let f = dct2d_naive(&m).unwrap();
        assert!((f.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_matches_naive_on_random_matrices() {
        for seed in 0..100 {
            let m = random_matrix(8, seed);
            let fast = dct2d(&m);
            let slow = dct2d_naive(&m).unwrap();
            assert!(max_abs_diff(&fast, &slow) < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn round_trip_holds_at_working_resolutions() {
        for k in [64usize, 112, 128] {
            for seed in 0..3 {
                let m = random_matrix(k, seed);
                let back = idct2d(&dct2d(&m));
                assert!(max_abs_diff(&m, &back) < 1e-9, "K={k} seed={seed}");
            }
        }
    }

    #[test]
    fn naive_rejects_oracle_scale_overrun() {
        let m = RealMatrix::zeros(MAX_NAIVE_SIZE + 1);
        assert!(matches!(dct2d_naive(&m), Err(Error::Config(_))));
    }

    #[test]
    fn inverse_recovers_dc_only_ones() {
        let f = RealMatrix::from_values(2, vec![2.0, 0.0, 0.0, 0.0]).unwrap();
        let m = idct2d(&f);
        for &v in m.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zigzag_4x4_order_is_the_jpeg_serpentine() {
        let expect = [
            (0, 0),
            (0, 1),
            (1, 0),
            (2, 0),
            (1, 1),
            (0, 2),
            (0, 3),
            (1, 2),
            (2, 1),
            (3, 0),
            (3, 1),
            (2, 2),
            (1, 3),
            (2, 3),
            (3, 2),
            (3, 3),
        ];
        assert_eq!(ZigzagOrder::new(4).pairs(), &expect);
    }

    #[test]
    fn zigzag_matches_walk_oracle() {
        for k in 1..=16 {
            assert_eq!(
                ZigzagOrder::new(k).pairs(),
                zigzag_walk(k).as_slice(),
                "size {k}"
            );
        }
    }

    #[test]
    fn scan_2x2_full_length_reads_row_major() {
        let f = RealMatrix::from_values(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(zigzag_scan(&f, 4).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn scan_length_one_yields_dc() {
        let f = random_matrix(5, 3);
        assert_eq!(zigzag_scan(&f, 1).unwrap(), vec![f.get(0, 0)]);
    }

    #[test]
    fn scan_rejects_out_of_range_lengths() {
        let f = RealMatrix::zeros(3);
        assert!(matches!(zigzag_scan(&f, 0), Err(Error::Dimension(_))));
        assert!(matches!(zigzag_scan(&f, 10), Err(Error::Dimension(_))));
        assert!(matches!(
            zigzag_unscan(&[0.0; 10], 3),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn unscan_single_coefficient_hits_dc() {
        let m = zigzag_unscan(&[5.0], 2).unwrap();
        assert_eq!(m.values(), &[5.0, 0.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(seed in 0u64..1000, k in 1usize..=32) {
            let m = random_matrix(k, seed);
            let back = idct2d(&dct2d(&m));
            prop_assert!(max_abs_diff(&m, &back) < 1e-9);
        }

        #[test]
        fn transform_preserves_energy(seed in 0u64..1000, k in 1usize..=32) {
            let m = random_matrix(k, seed);
            let f = dct2d(&m);
            let spatial: f64 = m.values().iter().map(|v| v * v).sum();
            let frequency: f64 = f.values().iter().map(|v| v * v).sum();
            prop_assert!((spatial - frequency).abs() <= 1e-6 * spatial.max(1.0));
        }

        #[test]
        fn transform_is_linear(seed in 0u64..1000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let a = random_matrix(8, seed);
            let b = random_matrix(8, seed.wrapping_add(99999));
            let mixed = RealMatrix::from_values(
                8,
                a.values()
                    .iter()
                    .zip(b.values())
                    .map(|(x, y)| alpha * x + beta * y)
                    .collect(),
            ).unwrap();
            let lhs = dct2d(&mixed);
            let fa = dct2d(&a);
            let fb = dct2d(&b);
            for i in 0..64 {
                let rhs = alpha * fa.values()[i] + beta * fb.values()[i];
                prop_assert!((lhs.values()[i] - rhs).abs() < 1e-9);
            }
        }

        #[test]
        fn zigzag_is_a_permutation(k in 1usize..=24) {
            let order = ZigzagOrder::new(k);
            let mut seen = vec![false; k * k];
            for &(r, c) in order.pairs() {
                prop_assert!(!seen[r * k + c]);
                seen[r * k + c] = true;
            }
            prop_assert!(seen.iter().all(|&s| s));
            prop_assert_eq!(order.pairs()[0], (0, 0));
        }

        #[test]
        fn unscan_inverts_scan(seed in 0u64..1000, k in 1usize..=12) {
            let f = random_matrix(k, seed);
            let full = zigzag_scan(&f, k * k).unwrap();
            let back = zigzag_unscan(&full, k).unwrap();
            prop_assert_eq!(back.values(), f.values());
        }

        #[test]
        fn scan_inverts_unscan(seed in 0u64..1000, k in 2usize..=12, frac in 0.1f64..1.0) {
            let n = ((k * k) as f64 * frac).ceil() as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let m = zigzag_unscan(&coeffs, k).unwrap();
            prop_assert_eq!(zigzag_scan(&m, n).unwrap(), coeffs);
        }
    }
}
