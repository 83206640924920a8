//! Conversion of frame representations into Kashin representations.
//!
//! A Kashin representation of level `K` writes `x = Σ a_i u_i` with
//! `max |a_i| ≤ (K/√N) ‖x‖`. For a tight frame with UP(η, δ) it is computed by
//! repeated truncation: expand the residual in the frame, clip every
//! coefficient at level `M`, resynthesize, subtract, and shrink `M` by `η`.
//! Each pass contracts the residual by `η`, so `r` passes leave an error of
//! at most `η^r ‖x‖` while the accumulated coefficients stay below
//! `M_0 / (1 - η) = (K/√N) ‖x‖` with `K = (1-η)^{-1} δ^{-1/2}`.
//!
//! Variants:
//! * approximate truncation `t` with constants `(ν, τ)`: `M ← M/τ`,
//!   `η ← √(η² + ν²)`;
//! * `ε`-tight frames: `M ← √(1+ε) M`, `η ← √(1+ε) η + ε`;
//! * exact final pass: the last pass keeps all coefficients, leaving no
//!   residual at the cost of a larger level.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::frames::FrameMatrix;
use crate::linalg::{check_finite, norm2, Complex64, ComplexVector, RngSeed};
use crate::uncertainty::UPParams;

/// A per-iteration residual ratio above `η' + NON_CONVERGENCE_SLACK` aborts
/// the conversion.
pub const NON_CONVERGENCE_SLACK: f64 = 0.05;

/// Number of points sampled when checking a user-supplied truncation map.
pub const CONTRACT_SAMPLES: usize = 1000;

/// Radial truncation `t_M(z) = (z/|z|) min(|z|, M)`, with `t_M(0) = 0`.
#[inline]
pub fn truncate_scalar(z: Complex64, level: f64) -> Complex64 {
    let r = z.norm();
    if r <= level {
        z
    } else {
        z * (level / r)
    }
}

/// Default approximate truncation at level 1.
///
/// Identity up to `|z| = τ`, then the magnitude bends smoothly towards 1 as
/// `τ + (1-τ) tanh((|z|-τ)/(1-τ))`. The phase is kept. Since `tanh u ≤ u`
/// the map never moves `z` by more than `|z|`, and it is exact (`ν = 0`)
/// below `τ`.
pub fn soft_clip(z: Complex64, tau: f64) -> Complex64 {
    let r = z.norm();
    if r <= tau {
        return z;
    }
    let width = 1.0 - tau;
    let mag = if width > 0.0 { tau + width * ((r - tau) / width).tanh() } else { 1.0 };
    z * (mag.min(r) / r)
}

/// Scalar map usable as an approximate truncation at level 1.
pub type ScalarMap = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Approximate truncation with constants `(ν, τ)`: `|z - t(z)| ≤ ν|z|` for
/// `|z| ≤ τ`, `|z - t(z)| ≤ |z|` and `|t(z)| ≤ 1` everywhere.
#[derive(Clone)]
pub struct ApproxTruncation {
    nu: f64,
    tau: f64,
    map: Option<ScalarMap>,
}

impl fmt::Debug for ApproxTruncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ApproxTruncation")
            .field("nu", &self.nu)
            .field("tau", &self.tau)
            .field("map", &if self.map.is_some() { "custom" } else { "soft_clip" })
            .finish()
    }
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl ApproxTruncation {
    /// Uses [`soft_clip`] as the map.
    pub fn new(nu: f64, tau: f64) -> Result<Self> {
        check_unit_interval("nu", nu)?;
        check_unit_interval("tau", tau)?;
        Ok(Self { nu, tau, map: None })
    }

    /// Uses a caller-supplied map, rejected unless it passes
    /// [`verify_truncation_contract`].
    pub fn with_map(nu: f64, tau: f64, map: ScalarMap) -> Result<Self> {
        check_unit_interval("nu", nu)?;
        check_unit_interval("tau", tau)?;
        verify_truncation_contract(map.as_ref(), nu, tau)?;
        Ok(Self { nu, tau, map: Some(map) })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// The level-1 map `t`.
    pub fn apply_unit(&self, z: Complex64) -> Complex64 {
        match &self.map {
            Some(f) => f(z),
            None => soft_clip(z, self.tau),
        }
    }
}

/// Samples the approximate-truncation contract on [`CONTRACT_SAMPLES`]
/// deterministic points: half inside the disk of radius `τ`, half spread
/// over radii up to 4.
pub fn verify_truncation_contract(map: &dyn Fn(Complex64) -> Complex64, nu: f64, tau: f64) -> Result<()> {
    const SLACK: f64 = 1e-12;
    let mut rng = RngSeed(0x6b61_7368_696e).rng();
    let check = |z: Complex64| -> Result<()> {
        let t = map(z);
        let r = z.norm();
        if !(t.re.is_finite() && t.im.is_finite()) {
            return Err(Error::ContractViolation(format!("t({z}) is not finite")));
        }
        if t.norm() > 1.0 + SLACK {
            return Err(Error::ContractViolation(format!("|t({z})| = {} exceeds 1", t.norm())));
        }
        let moved = (z - t).norm();
        if moved > r + SLACK {
            return Err(Error::ContractViolation(format!("|z - t(z)| = {moved} exceeds |z| = {r}")));
        }
        if r <= tau && moved > nu * r + SLACK {
            return Err(Error::ContractViolation(format!(
                "|z - t(z)| = {moved} exceeds nu|z| = {} inside the tau disk",
                nu * r
            )));
        }
        Ok(())
    };
    check(Complex64::new(0.0, 0.0))?;
    for i in 1..CONTRACT_SAMPLES {
        let radius = if i % 2 == 0 { tau * rng.random::<f64>() } else { 4.0 * rng.random::<f64>() };
        let phase = std::f64::consts::TAU * rng.random::<f64>();
        check(Complex64::from_polar(radius, phase))?;
    }
    Ok(())
}

/// `M t(z/M)`: approximate truncation scaled to level `M`.
pub fn approx_truncate_scalar(z: Complex64, level: f64, trunc: &ApproxTruncation) -> Complex64 {
    level * trunc.apply_unit(z / level)
}

#[derive(Debug, Clone, Default)]
pub enum TruncationSpec {
    #[default]
    Exact,
    Approximate(ApproxTruncation),
}

impl TruncationSpec {
    #[inline]
    pub fn apply(&self, z: Complex64, level: f64) -> Complex64 {
        match self {
            TruncationSpec::Exact => truncate_scalar(z, level),
            TruncationSpec::Approximate(t) => approx_truncate_scalar(z, level, t),
        }
    }
}

/// Truncation operator `T x = Σ t_M(<x, u_i>) u_i`.
///
/// Returns `(T x, b̂)` where `b̂` are the truncated coefficients.
pub fn truncation_operator(
    frame: &FrameMatrix,
    x: &[Complex64],
    level: f64,
    spec: &TruncationSpec,
) -> Result<(ComplexVector, ComplexVector)> {
    if !(level > 0.0) {
        return Err(Error::InvalidParams(format!("truncation level must be positive, got {level}")));
    }
    let mut b = frame.analysis(x)?;
    b.iter_mut().for_each(|z| *z = spec.apply(*z, level));
    let tx = frame.synthesis(&b)?;
    Ok((tx, b))
}

/// When to stop iterating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stopping {
    /// Fixed number of passes `r ≥ 1`.
    Iterations(usize),
    /// Enough passes for `η'^r ≤ target`.
    TargetAccuracy(f64),
}

#[derive(Debug, Clone)]
pub struct ConversionConfig {
    pub up: UPParams,
    pub truncation: TruncationSpec,
    pub stopping: Stopping,
    /// Skip truncation on the last pass so the result is exact.
    pub exact_last_iteration: bool,
    /// Tightness `ε` assumed for the frame; must cover the frame's measured value.
    pub frame_epsilon: f64,
}

impl ConversionConfig {
    pub fn new(up: UPParams, iterations: usize) -> Self {
        Self {
            up,
            truncation: TruncationSpec::Exact,
            stopping: Stopping::Iterations(iterations),
            exact_last_iteration: false,
            frame_epsilon: 0.0,
        }
    }

    pub fn with_truncation(mut self, truncation: TruncationSpec) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn with_stopping(mut self, stopping: Stopping) -> Self {
        self.stopping = stopping;
        self
    }

    pub fn with_exact_last_iteration(mut self, exact: bool) -> Self {
        self.exact_last_iteration = exact;
        self
    }

    pub fn with_frame_epsilon(mut self, eps: f64) -> Self {
        self.frame_epsilon = eps;
        self
    }

    /// Contraction factor `η'` after the `ε`-tight and approximate-truncation
    /// adjustments.
    pub fn adjusted_eta(&self) -> f64 {
        let eps = self.frame_epsilon;
        let eta = (1.0 + eps).sqrt() * self.up.eta() + eps;
        match &self.truncation {
            TruncationSpec::Exact => eta,
            TruncationSpec::Approximate(t) => (eta * eta + t.nu() * t.nu()).sqrt(),
        }
    }

    /// Factor applied to the initial truncation level `‖x‖/√(δN)`.
    pub fn level_multiplier(&self) -> f64 {
        let tight = (1.0 + self.frame_epsilon).sqrt();
        match &self.truncation {
            TruncationSpec::Exact => tight,
            TruncationSpec::Approximate(t) => tight / t.tau(),
        }
    }

    /// Level `K' = multiplier · (1-η')^{-1} δ^{-1/2}` of the truncated passes.
    pub fn kashin_level(&self) -> f64 {
        self.level_multiplier() / ((1.0 - self.adjusted_eta()) * self.up.delta().sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frame_epsilon >= 0.0 && self.frame_epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("frame epsilon must be >= 0, got {}", self.frame_epsilon)));
        }
        let eta = self.adjusted_eta();
        if !(eta < 1.0) {
            return Err(Error::InvalidConfig(format!("adjusted eta {eta} is not below 1")));
        }
        match self.stopping {
            Stopping::Iterations(0) => Err(Error::InvalidConfig("at least one iteration is required".into())),
            Stopping::TargetAccuracy(t) if !(t > 0.0 && t < 1.0) => {
                Err(Error::InvalidConfig(format!("target accuracy must lie in (0, 1), got {t}")))
            }
            _ => Ok(()),
        }
    }

    /// Number of passes the configuration asks for.
    pub fn iterations(&self) -> usize {
        match self.stopping {
            Stopping::Iterations(r) => r,
            Stopping::TargetAccuracy(t) => iterations_for_accuracy(self.adjusted_eta(), t),
        }
    }
}

/// Smallest `r ≥ 1` with `η^r ≤ target`. Exact powers are recognized
/// despite round-off.
pub fn iterations_for_accuracy(eta: f64, target: f64) -> usize {
    let q = target.ln() / eta.ln();
    let nearest = q.round();
    let r = if (q - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) { nearest } else { q.ceil() };
    (r as usize).max(1)
}

/// Smallest `r ≥ 1` with `η'^r ≤ K'/√N`: the pass count after which
/// plain frame coefficients of the residual fit under the Kashin level.
pub fn required_iterations(eta_prime: f64, len: usize, level: f64) -> usize {
    let target = level / (len as f64).sqrt();
    if target >= 1.0 {
        return 1;
    }
    iterations_for_accuracy(eta_prime, target)
}

/// Coefficients `a` with `x ≈ Σ a_i u_i` and a certified dynamic range.
#[derive(Debug, Clone, PartialEq)]
pub struct KashinRepresentation {
    pub coefficients: ComplexVector,
    /// `max |a_i| ≤ (level_k / √N) · input_norm`.
    pub level_k: f64,
    pub input_norm: f64,
    /// Upper bound on `‖x - Σ a_i u_i‖`.
    pub residual_bound: f64,
    pub iterations_used: usize,
    /// `‖x^{(k)}‖` for `k = 0..=iterations_used`, as tracked by the loop.
    pub residual_norms: Vec<f64>,
}

impl KashinRepresentation {
    /// Builds a representation from stored parts and re-checks the level bound.
    pub fn from_parts(coefficients: ComplexVector, level_k: f64, input_norm: f64, residual_bound: f64) -> Result<Self> {
        check_finite(&coefficients)?;
        let rep =
            Self { coefficients, level_k, input_norm, residual_bound, iterations_used: 0, residual_norms: Vec::new() };
        if !rep.satisfies_level_bound() {
            return Err(Error::InvalidParams(format!(
                "max coefficient {} exceeds level bound {}",
                rep.max_coefficient(),
                rep.level_bound()
            )));
        }
        Ok(rep)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn max_coefficient(&self) -> f64 {
        self.coefficients.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `(K/√N) ‖x‖`: the certified dynamic range.
    pub fn level_bound(&self) -> f64 {
        self.level_k / (self.len() as f64).sqrt() * self.input_norm
    }

    pub fn satisfies_level_bound(&self) -> bool {
        self.max_coefficient() <= self.level_bound() + 1e-12
    }

    /// Ratios `‖x^{(k+1)}‖ / ‖x^{(k)}‖` of consecutive residuals.
    pub fn residual_ratios(&self) -> Vec<f64> {
        self.residual_norms.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
    }
}

fn zero_vec(len: usize) -> ComplexVector {
    vec![Complex64::new(0.0, 0.0); len]
}

/// Runs the truncation iteration and returns a Kashin representation of `x`.
///
/// With `exact_last_iteration` the final pass keeps the raw frame
/// coefficients, and `level_k` certifies `K' + √N · max‖u_i‖ · ‖x^{(r-1)}‖/‖x‖`,
/// which is at most `2K'` once the residual has dropped below `K'/√N`.
pub fn kashin_encode(frame: &FrameMatrix, x: &[Complex64], cfg: &ConversionConfig) -> Result<KashinRepresentation> {
    cfg.validate()?;
    if frame.tightness_eps() > cfg.frame_epsilon + 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "frame is {}-tight but the config assumes epsilon = {}",
            frame.tightness_eps(),
            cfg.frame_epsilon
        )));
    }
    if x.len() != frame.dim() {
        return Err(Error::DimensionMismatch { expected: frame.dim(), found: x.len() });
    }
    check_finite(x)?;
    let len = frame.len();
    let eta = cfg.adjusted_eta();
    let k_prime = cfg.kashin_level();
    let input_norm = norm2(x);
    if input_norm == 0.0 {
        return Ok(KashinRepresentation {
            coefficients: zero_vec(len),
            level_k: k_prime,
            input_norm,
            residual_bound: 0.0,
            iterations_used: 0,
            residual_norms: vec![0.0],
        });
    }

    let passes = cfg.iterations();
    let mut level = cfg.level_multiplier() * input_norm / (cfg.up.delta() * len as f64).sqrt();
    let mut coeffs = zero_vec(len);
    let mut residual = x.to_vec();
    let mut norms = vec![input_norm];
    let mut untruncated_input = 0.0;

    for pass in 0..passes {
        let last_exact = cfg.exact_last_iteration && pass + 1 == passes;
        let current = *norms.last().expect("non-empty");
        let mut b = frame.analysis(&residual)?;
        if last_exact {
            untruncated_input = current;
        } else {
            b.iter_mut().for_each(|z| *z = cfg.truncation.apply(*z, level));
        }
        let tx = frame.synthesis(&b)?;
        residual.iter_mut().zip(&tx).for_each(|(r, t)| *r -= t);
        coeffs.iter_mut().zip(&b).for_each(|(a, bi)| *a += bi);
        level *= eta;

        let next = norm2(&residual);
        norms.push(next);
        let ratio = next / current;
        if ratio > eta + NON_CONVERGENCE_SLACK {
            return Err(Error::NonConvergence { iteration: pass, ratio, limit: eta + NON_CONVERGENCE_SLACK });
        }
        if next == 0.0 {
            break;
        }
    }

    let level_k = if cfg.exact_last_iteration {
        let max_col = (0..len).map(|i| norm2(&frame.frame_vector(i))).fold(0.0, f64::max);
        k_prime + (len as f64).sqrt() * max_col * untruncated_input / input_norm
    } else {
        k_prime
    };
    let recon = frame.synthesis(&coeffs)?;
    let actual: f64 = norm2(&x.iter().zip(&recon).map(|(a, b)| a - b).collect::<Vec<_>>());
    Ok(KashinRepresentation {
        coefficients: coeffs,
        level_k,
        input_norm,
        residual_bound: actual + 1e-12 * input_norm,
        iterations_used: norms.len() - 1,
        residual_norms: norms,
    })
}

/// `Σ a_i u_i` for the stored coefficients.
pub fn kashin_decode(frame: &FrameMatrix, rep: &KashinRepresentation) -> Result<ComplexVector> {
    frame.synthesis(&rep.coefficients)
}
