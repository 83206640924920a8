//! Dense complex linear algebra used by every other module.
//!
//! Vectors are plain `Vec<Complex64>` / `&[Complex64]`; matrices are row-major
//! [`ComplexMatrix`]. The inner product conjugates its second argument:
//! `inner(x, y) = Σ x_i · conj(y_i)`.
//!
//! Random sampling goes through [`RngSeed`], which always builds a
//! `ChaCha8Rng` seeded with `seed_from_u64`. The generator is part of the
//! output contract: a given seed yields the same matrices on every platform
//! and build.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
pub use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type ComplexVector = Vec<Complex64>;

/// The generator behind every seeded construction.
pub type SeededRng = ChaCha8Rng;

/// 64-bit seed for the deterministic generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> SeededRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Seed for the `index`-th independent stream (trial, support, ...).
    pub fn derive(self, index: u64) -> RngSeed {
        RngSeed(self.0.wrapping_add(index))
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

/// Returns an error naming the first NaN/Inf entry.
pub fn check_finite(x: &[Complex64]) -> Result<()> {
    match x.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn check_len(x: &[Complex64], expected: usize) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, found: x.len() });
    }
    Ok(())
}

/// Row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexMatrix").field("rows", &self.rows).field("cols", &self.cols).finish_non_exhaustive()
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParams(format!("matrix shape {rows}x{cols} has an empty side")));
        }
        check_len(&data, rows * cols)?;
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    /// `rows x cols` matrix with ones on the main diagonal.
    pub fn identity(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// Submatrix made of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }

    /// `A A*` (rows x rows).
    pub fn gram_rows(&self) -> Self {
        let mut g = Self::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let v = inner(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    /// `A* A` (cols x cols).
    pub fn gram_cols(&self) -> Self {
        let mut g = Self::zeros(self.cols, self.cols);
        for row in self.data.chunks_exact(self.cols) {
            for j in 0..self.cols {
                let cj = row[j].conj();
                for k in j..self.cols {
                    g[(j, k)] += cj * row[k];
                }
            }
        }
        for j in 0..self.cols {
            for k in 0..j {
                g[(j, k)] = g[(k, j)].conj();
            }
        }
        g
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `m x`
pub fn matvec(m: &ComplexMatrix, x: &[Complex64]) -> Result<ComplexVector> {
    check_len(x, m.cols)?;
    Ok(m.data.chunks_exact(m.cols).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect())
}

/// `m* y`
pub fn adjoint_matvec(m: &ComplexMatrix, y: &[Complex64]) -> Result<ComplexVector> {
    check_len(y, m.rows)?;
    let mut out = vec![Complex64::new(0.0, 0.0); m.cols];
    for (row, yi) in m.data.chunks_exact(m.cols).zip(y) {
        for (o, a) in out.iter_mut().zip(row) {
            *o += a.conj() * yi;
        }
    }
    Ok(out)
}

/// Cached unitary DFT of a fixed length.
///
/// Forward: `y_j = N^{-1/2} Σ_k x_k e^{-2πi jk/N}`; inverse is its adjoint.
#[derive(Clone)]
pub struct DftPlan {
    len: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DftPlan").field("len", &self.len).finish()
    }
}

impl DftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "DFT length must be positive");
        let mut planner = FftPlanner::new();
        Self {
            len,
            scale: (len as f64).sqrt().recip(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }
}

/// Unitary DFT.
pub fn dft(x: &[Complex64]) -> ComplexVector {
    let mut buf = x.to_vec();
    DftPlan::new(x.len()).forward_in_place(&mut buf);
    buf
}

/// Inverse unitary DFT (the adjoint of [`dft`]).
pub fn idft(y: &[Complex64]) -> ComplexVector {
    let mut buf = y.to_vec();
    DftPlan::new(y.len()).inverse_in_place(&mut buf);
    buf
}

/// Quadratic-time unitary DFT straight from the definition. Reference path for
/// benchmarks; `inverse` flips the sign of the exponent.
pub fn direct_dft(x: &[Complex64], inverse: bool) -> ComplexVector {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let scale = (n as f64).sqrt().recip();
    (0..n)
        .map(|j| {
            let s: Complex64 = x
                .iter()
                .enumerate()
                .map(|(k, xk)| {
                    // reduce jk mod n first so the angle stays small for large n
                    let phase = sign * std::f64::consts::TAU * ((j * k) % n) as f64 / n as f64;
                    xk * Complex64::from_polar(1.0, phase)
                })
                .sum();
            s * scale
        })
        .collect()
}

/// Orthonormalizes the rows of `m` with twice-iterated modified Gram-Schmidt.
///
/// Equivalent to `m = L Q` with `L` lower triangular and a positive real
/// diagonal, so a Gaussian input yields a Haar-distributed `Q`.
pub fn qr_orthonormalize_rows(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if m.rows > m.cols {
        return Err(Error::InvalidParams(format!("cannot orthonormalize {} rows in dimension {}", m.rows, m.cols)));
    }
    let largest = (0..m.rows).map(|i| norm2(m.row(i))).fold(0.0, f64::max);
    let threshold = 1e-12 * largest;
    let mut q = m.clone();
    for i in 0..q.rows {
        let mut v = q.row(i).to_vec();
        for _pass in 0..2 {
            for j in 0..i {
                let qj = q.row(j);
                let c = inner(&v, qj);
                v.iter_mut().zip(qj).for_each(|(a, b)| *a -= c * b);
            }
        }
        let pivot = norm2(&v);
        if !(pivot > threshold) {
            return Err(Error::RankDeficient { row: i, pivot, threshold });
        }
        q.row_mut(i).iter_mut().zip(&v).for_each(|(dst, src)| *dst = src / pivot);
    }
    Ok(q)
}

/// `rows x cols` matrix of real standard normal entries.
pub fn sample_gaussian(rows: usize, cols: usize, seed: RngSeed) -> ComplexMatrix {
    let mut rng = seed.rng();
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(v, 0.0)
    })
}

/// `rows x cols` matrix of independent symmetric ±1 entries.
pub fn sample_bernoulli(rows: usize, cols: usize, seed: RngSeed) -> ComplexMatrix {
    use rand::Rng;
    let mut rng = seed.rng();
    ComplexMatrix::from_fn(rows, cols, |_, _| Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0))
}

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending, with
/// matching eigenvectors as columns of the returned matrix.
pub fn hermitian_eigen(h: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    assert_eq!(h.rows, h.cols, "hermitian_eigen needs a square matrix");
    let eig = SymmetricEigen::new(to_nalgebra(h));
    let mut order: Vec<usize> = (0..h.rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(h.rows, h.rows, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Singular values of `m`, ascending. There are `min(rows, cols)` of them.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let gram = if m.rows <= m.cols { m.gram_rows() } else { m.gram_cols() };
    hermitian_eigen(&gram).0.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// Largest singular value with a unit right singular vector.
pub fn top_singular_pair(m: &ComplexMatrix) -> (f64, ComplexVector) {
    let (values, vectors) = hermitian_eigen(&m.gram_cols());
    let last = values.len() - 1;
    let v = vectors.column(last);
    // recompute from the vector so the ratio is exactly reproducible
    let sigma = norm2(&matvec(m, &v).expect("shape checked")) / norm2(&v);
    (sigma, v)
}

/// Power iteration on `m* m` for the largest singular value.
///
/// Runs at most `max_iter` steps and stops once the Rayleigh estimate moves by
/// less than `tol` (relative). The returned value is `‖m v‖ / ‖v‖` for the
/// final iterate, so it never exceeds the true operator norm.
pub fn power_iteration(
    m: &ComplexMatrix,
    start: &[Complex64],
    max_iter: usize,
    tol: f64,
) -> Result<(f64, ComplexVector)> {
    check_len(start, m.cols)?;
    let mut v = start.to_vec();
    let n0 = norm2(&v);
    if n0 == 0.0 {
        return Err(Error::InvalidParams("power iteration needs a nonzero start".into()));
    }
    v.iter_mut().for_each(|z| *z /= n0);
    let mut sigma = norm2(&matvec(m, &v)?);
    for _ in 0..max_iter {
        let w = adjoint_matvec(m, &matvec(m, &v)?)?;
        let nw = norm2(&w);
        if nw == 0.0 {
            break;
        }
        v = w.into_iter().map(|z| z / nw).collect();
        let next = norm2(&matvec(m, &v)?);
        let converged = (next - sigma).abs() <= tol * next.max(f64::MIN_POSITIVE);
        sigma = next;
        if converged {
            break;
        }
    }
    Ok((sigma, v))
}
