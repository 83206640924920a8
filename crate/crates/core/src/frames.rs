//! Frames in `C^n` stored as `n x N` frame matrices whose columns are the
//! frame vectors `u_i`.
//!
//! Three random families are provided: Haar-distributed matrices with
//! orthonormal rows, randomly selected rows of the unitary DFT, and
//! normalized Gaussian / Bernoulli matrices (almost tight). Analysis computes
//! `b_i = <x, u_i>` (that is `U* x`), synthesis computes `Σ a_i u_i = U a`.
//! Partial Fourier frames never materialize `U`; both operators run through
//! an FFT of length `N`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    adjoint_matvec, check_finite, matvec, norm2, qr_orthonormalize_rows, sample_bernoulli, sample_gaussian,
    singular_values, Complex64, ComplexMatrix, ComplexVector, DftPlan, RngSeed,
};

/// How rows of the DFT are picked for a partial Fourier frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectorMode {
    /// Each row kept independently with probability `n/N`; `|Ω|` is random.
    #[default]
    BernoulliSelectors,
    /// A uniformly random subset of exactly `n` rows.
    ExactN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgaussianDist {
    Gaussian,
    Bernoulli,
}

/// Storage behind a frame.
#[derive(Debug, Clone)]
pub enum FrameKind {
    Dense(ComplexMatrix),
    /// Rows `rows` (sorted, distinct) of the unitary `N`-point DFT.
    PartialFourier {
        rows: Vec<usize>,
        plan: DftPlan,
    },
}

/// An `n x N` frame matrix together with its measured tightness.
#[derive(Debug, Clone)]
pub struct FrameMatrix {
    dim: usize,
    len: usize,
    kind: FrameKind,
    tightness_eps: f64,
}

impl FrameMatrix {
    /// Wraps a dense frame matrix and measures its tightness.
    pub fn from_dense(m: ComplexMatrix) -> Result<Self> {
        if m.rows() > m.cols() {
            return Err(Error::InvalidParams(format!("frame needs N >= n, got n={} N={}", m.rows(), m.cols())));
        }
        let mut frame = Self { dim: m.rows(), len: m.cols(), kind: FrameKind::Dense(m), tightness_eps: 0.0 };
        frame.tightness_eps = measure_tightness(&frame);
        Ok(frame)
    }

    /// Partial Fourier frame on the given DFT rows of size `len`.
    pub fn partial_fourier(len: usize, rows: Vec<usize>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySelection);
        }
        if rows.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("partial Fourier rows must be sorted and distinct".into()));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= len) {
            return Err(Error::InvalidParams(format!("row index {bad} out of range for N={len}")));
        }
        Ok(Self {
            dim: rows.len(),
            len,
            kind: FrameKind::PartialFourier { rows, plan: DftPlan::new(len) },
            tightness_eps: 0.0,
        })
    }

    /// Signal dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of frame vectors `N`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn kind(&self) -> &FrameKind {
        &self.kind
    }

    pub fn is_partial_fourier(&self) -> bool {
        matches!(self.kind, FrameKind::PartialFourier { .. })
    }

    /// Measured `ε` of the two-sided bound `(1-ε)‖x‖ ≤ ‖U* x‖ ≤ (1+ε)‖x‖`.
    pub fn tightness_eps(&self) -> f64 {
        self.tightness_eps
    }

    /// Redundancy `N / n`.
    pub fn redundancy(&self) -> f64 {
        self.len as f64 / self.dim as f64
    }

    /// Explicit `n x N` matrix (materialized for partial Fourier frames).
    pub fn to_dense(&self) -> ComplexMatrix {
        match &self.kind {
            FrameKind::Dense(m) => m.clone(),
            FrameKind::PartialFourier { .. } => self.columns(&(0..self.len).collect::<Vec<_>>()),
        }
    }

    /// The `i`-th frame vector `u_i` (column `i`).
    pub fn frame_vector(&self, i: usize) -> ComplexVector {
        let mut e = vec![Complex64::new(0.0, 0.0); self.len];
        e[i] = Complex64::new(1.0, 0.0);
        self.synthesis(&e).expect("length matches by construction")
    }

    /// Column submatrix `U_Ω` (`n x |Ω|`).
    pub fn columns(&self, support: &[usize]) -> ComplexMatrix {
        match &self.kind {
            FrameKind::Dense(m) => m.select_columns(support),
            FrameKind::PartialFourier { rows, .. } => {
                let len = self.len;
                let scale = (len as f64).sqrt().recip();
                ComplexMatrix::from_fn(rows.len(), support.len(), |j, k| {
                    let phase = -std::f64::consts::TAU * ((rows[j] * support[k]) % len) as f64 / len as f64;
                    Complex64::from_polar(scale, phase)
                })
            }
        }
    }

    /// `Σ_i ‖u_i‖²`, which equals `n` for a tight frame.
    pub fn frame_norm_sum(&self) -> f64 {
        match &self.kind {
            FrameKind::Dense(m) => m.as_slice().iter().map(|z| z.norm_sqr()).sum(),
            FrameKind::PartialFourier { rows, .. } => rows.len() as f64,
        }
    }

    /// Frame coefficients `b_i = <x, u_i>`.
    pub fn analysis(&self, x: &[Complex64]) -> Result<ComplexVector> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        match &self.kind {
            FrameKind::Dense(m) => adjoint_matvec(m, x),
            FrameKind::PartialFourier { rows, plan } => {
                // U* x = Φ* (x placed on Ω)
                let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
                for (&r, &v) in rows.iter().zip(x) {
                    buf[r] = v;
                }
                plan.inverse_in_place(&mut buf);
                Ok(buf)
            }
        }
    }

    /// Reconstruction `Σ a_i u_i`.
    pub fn synthesis(&self, a: &[Complex64]) -> Result<ComplexVector> {
        if a.len() != self.len {
            return Err(Error::DimensionMismatch { expected: self.len, found: a.len() });
        }
        match &self.kind {
            FrameKind::Dense(m) => matvec(m, a),
            FrameKind::PartialFourier { rows, plan } => {
                let mut buf = a.to_vec();
                plan.forward_in_place(&mut buf);
                Ok(rows.iter().map(|&r| buf[r]).collect())
            }
        }
    }
}

/// Tightness `ε = max(1 - σ_min(U), σ_max(U) - 1)`, clamped at zero.
///
/// Dense frames use exact singular values. Partial Fourier rows are exactly
/// orthonormal, so they report zero without a decomposition.
pub fn measure_tightness(frame: &FrameMatrix) -> f64 {
    match &frame.kind {
        FrameKind::PartialFourier { .. } => 0.0,
        FrameKind::Dense(m) => {
            let sv = singular_values(m);
            let lo = sv.first().copied().unwrap_or(0.0);
            let hi = sv.last().copied().unwrap_or(0.0);
            (1.0 - lo).max(hi - 1.0).max(0.0)
        }
    }
}

fn check_shape(n: usize, len: usize) -> Result<()> {
    if n == 0 || n > len {
        return Err(Error::InvalidParams(format!("frame needs 1 <= n <= N, got n={n} N={len}")));
    }
    Ok(())
}

/// Random `n x N` matrix with orthonormal rows, Haar distributed.
pub fn gen_random_orthogonal(n: usize, len: usize, seed: RngSeed) -> Result<FrameMatrix> {
    check_shape(n, len)?;
    let q = qr_orthonormalize_rows(&sample_gaussian(n, len, seed))?;
    FrameMatrix::from_dense(q)
}

/// Random rows of the unitary `N`-point DFT.
pub fn gen_partial_fourier(len: usize, n: usize, seed: RngSeed, mode: SelectorMode) -> Result<FrameMatrix> {
    check_shape(n, len)?;
    let mut rng = seed.rng();
    let rows: Vec<usize> = match mode {
        SelectorMode::BernoulliSelectors => {
            let p = n as f64 / len as f64;
            (0..len).filter(|_| rng.random::<f64>() < p).collect()
        }
        SelectorMode::ExactN => {
            let mut all: Vec<usize> = (0..len).collect();
            all.shuffle(&mut rng);
            let mut picked = all[..n].to_vec();
            picked.sort_unstable();
            picked
        }
    };
    FrameMatrix::partial_fourier(len, rows)
}

/// `U = N^{-1/2} Φ` with i.i.d. Gaussian or ±1 entries in `Φ`.
pub fn gen_subgaussian(n: usize, len: usize, dist: SubgaussianDist, seed: RngSeed) -> Result<FrameMatrix> {
    check_shape(n, len)?;
    let phi = match dist {
        SubgaussianDist::Gaussian => sample_gaussian(n, len, seed),
        SubgaussianDist::Bernoulli => sample_bernoulli(n, len, seed),
    };
    FrameMatrix::from_dense(phi.scaled((len as f64).sqrt().recip()))
}

/// Which random construction a frame came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyTag {
    RandomOrthogonal,
    PartialFourier(SelectorMode),
    Gaussian,
    Bernoulli,
}

/// A frame family together with its generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameFamily {
    pub tag: FamilyTag,
    pub n: usize,
    pub len: usize,
    pub seed: RngSeed,
}

impl FrameFamily {
    pub fn new(tag: FamilyTag, n: usize, len: usize, seed: RngSeed) -> Result<Self> {
        check_shape(n, len)?;
        Ok(Self { tag, n, len, seed })
    }

    pub fn generate(&self) -> Result<FrameMatrix> {
        match self.tag {
            FamilyTag::RandomOrthogonal => gen_random_orthogonal(self.n, self.len, self.seed),
            FamilyTag::PartialFourier(mode) => gen_partial_fourier(self.len, self.n, self.seed, mode),
            FamilyTag::Gaussian => gen_subgaussian(self.n, self.len, SubgaussianDist::Gaussian, self.seed),
            FamilyTag::Bernoulli => gen_subgaussian(self.n, self.len, SubgaussianDist::Bernoulli, self.seed),
        }
    }
}

/// Relative Parseval defect `|Σ|<x,u_i>|² - ‖x‖²| / ‖x‖²` for one vector.
pub fn parseval_defect(frame: &FrameMatrix, x: &[Complex64]) -> Result<f64> {
    check_finite(x)?;
    let nx = norm2(x);
    if nx == 0.0 {
        return Ok(0.0);
    }
    let b = frame.analysis(x)?;
    Ok((norm2(&b).powi(2) - nx * nx).abs() / (nx * nx))
}
