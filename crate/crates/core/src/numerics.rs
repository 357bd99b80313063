//! Dense row-major matrices and a seeded, platform-independent random source.
//!
//! The networks here have a handful of neurons per layer, so everything is a
//! plain `Vec<f64>` with explicit loops.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense vector of activations, inputs or biases.
pub type Vector = Vec<f64>;

/// Row-major dense matrix. `data.len() == rows * cols` always holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::new",
                format!("{} entries for {rows}x{cols}", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::shape(
                    "Matrix::from_rows",
                    format!("{cols} columns"),
                    format!("{} columns in row {i}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    /// `A · x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.cols {
            return Err(Error::shape(
                "mat_vec_mul",
                format!(
                    "vector of length {} (matrix is {})",
                    self.cols,
                    self.shape_string()
                ),
                format!("length {}", x.len()),
            ));
        }
        Ok(self
            .data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `Aᵀ · x` without materializing the transpose.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.rows {
            return Err(Error::shape(
                "transpose_mul_vec",
                format!(
                    "vector of length {} (matrix is {})",
                    self.rows,
                    self.shape_string()
                ),
                format!("length {}", x.len()),
            ));
        }
        let mut out = vec![0.0; self.cols];
        for (row, &xi) in self.data.chunks_exact(self.cols.max(1)).zip(x) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }
}

/// Free-function form of [`Matrix::mul_vec`].
pub fn mat_vec_mul(a: &Matrix, x: &[f64]) -> Result<Vector> {
    a.mul_vec(x)
}

/// Free-function form of [`Matrix::transpose`].
pub fn mat_transpose(a: &Matrix) -> Matrix {
    a.transpose()
}

/// Seeded random source backed by ChaCha8.
///
/// The ChaCha stream for a given seed is fixed by the algorithm, and the
/// conversion to floats below uses only integer shifts and one exact
/// multiplication, so draws are bitwise identical on every platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw on `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidRange { lo, hi });
        }
        loop {
            let value = lo + (hi - lo) * self.unit();
            // rounding can land exactly on hi when the span is tiny
            if value < hi {
                return Ok(value);
            }
        }
    }
}

/// State-passing form of [`SeededRng::uniform`].
pub fn rng_uniform(mut state: SeededRng, lo: f64, hi: f64) -> Result<(f64, SeededRng)> {
    let value = state.uniform(lo, hi)?;
    Ok((value, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_times_vector() {
        let y = mat_vec_mul(&Matrix::identity(2), &[3.0, 4.0]).unwrap();
        assert_eq!(y, vec![3.0, 4.0]);
    }

    #[test]
    fn hand_computed_product() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(mat_vec_mul(&a, &[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
    }

    #[test]
    fn zero_matrix_annihilates() {
        let y = mat_vec_mul(&Matrix::zeros(2, 2), &[5.0, 6.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn mul_vec_rejects_bad_length() {
        let err = Matrix::zeros(2, 3).mul_vec(&[1.0, 2.0]).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("length 3") && msg.contains("length 2"),
            "{msg}"
        );
    }

    #[test]
    fn new_rejects_wrong_data_length() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn transpose_examples() {
        assert_eq!(mat_transpose(&Matrix::identity(2)), Matrix::identity(2));
        let row = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let col = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(row.transpose(), col);
    }

    #[test]
    fn transpose_mul_matches_explicit_transpose() {
        let a = Matrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![3.0, 4.0, -1.0]]).unwrap();
        let x = [0.25, -1.5];
        assert_eq!(
            a.transpose_mul_vec(&x).unwrap(),
            a.transpose().mul_vec(&x).unwrap()
        );
    }

    #[test]
    fn same_seed_same_draws() {
        let (a, _) = rng_uniform(SeededRng::new(42), 0.0, 1.0).unwrap();
        let (b, _) = rng_uniform(SeededRng::new(42), 0.0, 1.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn draws_stay_in_range() {
        let mut rng = SeededRng::new(7);
        for _ in 0..10_000 {
            let v = rng.uniform(-1.0, 1.0).unwrap();
            assert!((-1.0..1.0).contains(&v));
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = SeededRng::new(1).uniform(0.0, 1.0).unwrap();
        let b = SeededRng::new(2).uniform(0.0, 1.0).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn fixture_first_draws() {
        // frozen from the generator; any change here breaks reproducibility
        let a = SeededRng::new(1).uniform(0.0, 1.0).unwrap();
        let b = SeededRng::new(2).uniform(0.0, 1.0).unwrap();
        assert_eq!(a.to_bits(), FIXTURE_SEED1.to_bits(), "seed 1 drew {a:?}");
        assert_eq!(b.to_bits(), FIXTURE_SEED2.to_bits(), "seed 2 drew {b:?}");
    }

    const FIXTURE_SEED1: f64 = 0.402_485_663_664_848_06;
    const FIXTURE_SEED2: f64 = 0.881_340_729_350_576_5;

    #[test]
    fn invalid_range_is_rejected() {
        let mut rng = SeededRng::new(0);
        assert!(matches!(
            rng.uniform(1.0, 1.0),
            Err(Error::InvalidRange { .. })
        ));
        assert!(matches!(
            rng.uniform(2.0, 1.0),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn million_draw_sequence_is_reproducible() {
        let mut a = SeededRng::new(2024);
        let mut b = SeededRng::new(2024);
        for _ in 0..1_000_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    proptest! {
        #[test]
        fn identity_is_exact(x in prop::collection::vec(-1e6f64..1e6, 1..=64)) {
            let y = Matrix::identity(x.len()).mul_vec(&x).unwrap();
            prop_assert_eq!(y, x);
        }

        #[test]
        fn mul_distributes_over_addition(
            (rows, cols, a, x, y) in (1usize..8, 1usize..8).prop_flat_map(|(r, c)| (
                Just(r),
                Just(c),
                prop::collection::vec(-1.0f64..1.0, r * c),
                prop::collection::vec(-1.0f64..1.0, c),
                prop::collection::vec(-1.0f64..1.0, c),
            ))
        ) {
            let m = Matrix::new(rows, cols, a).unwrap();
            let sum: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p + q).collect();
            let lhs = m.mul_vec(&sum).unwrap();
            let mx = m.mul_vec(&x).unwrap();
            let my = m.mul_vec(&y).unwrap();
            for i in 0..rows {
                prop_assert!((lhs[i] - (mx[i] + my[i])).abs() <= 1e-12);
            }
        }

        #[test]
        fn transpose_is_involution(
            (rows, cols, a) in (1usize..6, 1usize..6)
                .prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(-10.0f64..10.0, r * c)))
        ) {
            let m = Matrix::new(rows, cols, a).unwrap();
            prop_assert_eq!(m.transpose().transpose(), m);
        }
    }
}
