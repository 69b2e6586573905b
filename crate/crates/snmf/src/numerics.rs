//! Dense-matrix arithmetic, the nonnegative cone, and seeded sampling.
//!
//! Everything here is 64-bit and row-major. Binary operations check shapes
//! eagerly; the n×r / r×m conventions used elsewhere make silent transposition
//! the dominant bug class, so mismatches fail loudly instead of broadcasting.
//!
//! Randomness goes through [`RngSeed`], which hands out independent ChaCha8
//! streams. ChaCha8 is counter-based and platform-stable: the same seed gives
//! bit-identical draws everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnmfError};

/// Row-major dense matrix of finite `f64` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(SnmfError::ShapeMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(SnmfError::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        for (k, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(SnmfError::NonFiniteEntry {
                    row: k / cols,
                    col: k % cols,
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(SnmfError::ShapeMismatch("ragged rows".into()));
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self * other`; panics on inner-dimension mismatch (internal misuse).
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul inner dimensions: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        // i-k-j order keeps both operands streaming row-major.
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * other^T` without materializing the transpose.
    pub fn matmul_bt(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.cols, "matmul_bt inner dimensions");
        DenseMatrix::from_fn(self.rows, other.rows, |i, j| {
            dot(self.row(i), other.row(j))
        })
    }

    /// `self^T * other` without materializing the transpose.
    pub fn matmul_at(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "matmul_at inner dimensions");
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = &self.data[k * self.cols..(k + 1) * self.cols];
            let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_same_shape(self, other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_same_shape(self, other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_same_shape(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(SnmfError::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(())
}

/// Matrix constrained to the nonnegative orthant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DenseMatrix", into = "DenseMatrix")]
pub struct NonNegMatrix(DenseMatrix);

impl NonNegMatrix {
    pub fn new(inner: DenseMatrix) -> Result<Self> {
        for (k, &v) in inner.data.iter().enumerate() {
            if v < 0.0 {
                return Err(SnmfError::NegativeEntry {
                    row: k / inner.cols,
                    col: k % inner.cols,
                    value: v,
                });
            }
        }
        Ok(Self(inner))
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_dense(self) -> DenseMatrix {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows
    }

    pub fn cols(&self) -> usize {
        self.0.cols
    }
}

impl TryFrom<DenseMatrix> for NonNegMatrix {
    type Error = SnmfError;
    fn try_from(m: DenseMatrix) -> Result<Self> {
        NonNegMatrix::new(m)
    }
}

impl From<NonNegMatrix> for DenseMatrix {
    fn from(m: NonNegMatrix) -> Self {
        m.0
    }
}

/// Seed for every random draw in the crate.
///
/// Independent sub-streams come from ChaCha8's stream parameter, so
/// concurrently-consumed streams stay order-independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    /// Derive a child seed for an independent sub-experiment.
    pub fn child(&self, index: u64) -> RngSeed {
        RngSeed(self.0.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index))
    }
}

/// Σᵢⱼ Aᵢⱼ².
/// ½‖X − UV‖²_F without materializing UV or the residual. Summation order
/// matches `frobenius_sq(&u.matmul(v).sub(x))` term for term, so the two
/// forms produce the same float.
pub fn recon_half_sq(x: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix) -> f64 {
    assert_eq!(u.cols, v.rows, "recon inner dimensions");
    assert_eq!(u.rows, x.rows, "recon row count");
    assert_eq!(v.cols, x.cols, "recon column count");
    let m = x.cols;
    let mut buf = vec![0.0f64; m];
    let mut acc = 0.0;
    for i in 0..x.rows {
        buf.iter_mut().for_each(|b| *b = 0.0);
        for (k, &a) in u.row(i).iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &b) in buf.iter_mut().zip(v.row(k)) {
                *o += a * b;
            }
        }
        for (&p, &q) in buf.iter().zip(x.row(i)) {
            let d = p - q;
            acc += d * d;
        }
    }
    0.5 * acc
}

pub fn frobenius_sq(a: &DenseMatrix) -> f64 {
    a.data.iter().map(|v| v * v).sum()
}

/// Entrywise max(·, 0): the projection P₊ onto the nonnegative orthant.
pub fn project_nonneg(a: &DenseMatrix) -> NonNegMatrix {
    NonNegMatrix(a.map(|v| v.max(0.0)))
}

/// Hadamard division A ⊘ B.
pub fn elementwise_div(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    check_same_shape(a, b)?;
    for (k, &v) in b.data.iter().enumerate() {
        if v == 0.0 {
            return Err(SnmfError::ZeroDenominator {
                row: k / b.cols,
                col: k % b.cols,
            });
        }
    }
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x / y).collect();
    Ok(DenseMatrix {
        rows: a.rows,
        cols: a.cols,
        data,
    })
}

/// Hadamard product A ⊙ B.
pub fn elementwise_mul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    check_same_shape(a, b)?;
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
    Ok(DenseMatrix {
        rows: a.rows,
        cols: a.cols,
        data,
    })
}

/// `count` rows of independent draws, column j ~ Normal(meanⱼ, cov_diagⱼ).
pub fn sample_gaussian(
    mean: &[f64],
    cov_diag: &[f64],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DenseMatrix> {
    if mean.len() != cov_diag.len() {
        return Err(SnmfError::ShapeMismatch(format!(
            "mean has {} entries, cov_diag has {}",
            mean.len(),
            cov_diag.len()
        )));
    }
    for (index, &v) in cov_diag.iter().enumerate() {
        if v <= 0.0 {
            return Err(SnmfError::NonPositiveVariance { index, value: v });
        }
    }
    let dists: Vec<Normal<f64>> = mean
        .iter()
        .zip(cov_diag)
        .map(|(&m, &v)| Normal::new(m, v.sqrt()).expect("validated above"))
        .collect();
    let cols = mean.len();
    let mut data = Vec::with_capacity(count * cols);
    for _ in 0..count {
        for d in &dists {
            data.push(d.sample(rng));
        }
    }
    DenseMatrix::new(count, cols, data)
}

/// Uniform(0,1) matrix.
pub fn sample_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.gen::<f64>()).collect();
    DenseMatrix {
        rows,
        cols,
        data,
    }
}

/// Central-difference gradient of a scalar field over matrices.
///
/// Test oracle for the analytic gradients; deliberately independent of any
/// gradient code in this crate.
pub fn finite_diff_grad(f: impl Fn(&DenseMatrix) -> f64, a: &DenseMatrix, h: f64) -> DenseMatrix {
    assert!(h > 0.0, "step must be positive");
    let mut grad = DenseMatrix::zeros(a.rows, a.cols);
    let mut probe = a.clone();
    for k in 0..a.data.len() {
        let orig = a.data[k];
        probe.data[k] = orig + h;
        let fp = f(&probe);
        probe.data[k] = orig - h;
        let fm = f(&probe);
        probe.data[k] = orig;
        grad.data[k] = (fp - fm) / (2.0 * h);
    }
    grad
}
