//! Uniform scalar quantization of representation coefficients and
//! coefficient-damage channels.
//!
//! Kashin coefficients live in `[-W, W]` with `W = (K/√N)‖x‖`, so a mid-rise
//! quantizer with `L` cells over that interval errs by at most `W/L` per real
//! component. Since a tight frame's synthesis operator has norm one, the
//! reconstruction error is at most `‖a - â‖ ≤ K‖x‖/L` (times `√2` when real
//! and imaginary parts are quantized separately). Damaging `d` coefficients
//! arbitrarily, but within magnitude `W`, adds at most `2W√d`.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::frames::FrameMatrix;
use crate::kashin::KashinRepresentation;
use crate::linalg::{norm2, Complex64, ComplexVector, RngSeed};
use crate::uncertainty::support_size;

/// Mid-rise uniform quantizer with `levels` cells on `[-half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    levels: u32,
    half_width: f64,
    complex_mode: bool,
}

impl QuantizerSpec {
    pub fn new(levels: u32, half_width: f64, complex_mode: bool) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 quantizer levels, got {levels}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParams(format!("quantizer half width must be positive, got {half_width}")));
        }
        Ok(Self { levels, half_width, complex_mode })
    }

    /// Quantizer over the certified range of `rep`; complex mode is chosen
    /// when any coefficient has a nonzero imaginary part.
    pub fn for_representation(rep: &KashinRepresentation, levels: u32) -> Result<Self> {
        Self::new(levels, rep.level_bound(), has_imaginary_part(&rep.coefficients))
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn complex_mode(&self) -> bool {
        self.complex_mode
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.levels as f64
    }

    /// Worst-case error per real component, `W/L`.
    pub fn max_component_error(&self) -> f64 {
        self.half_width / self.levels as f64
    }

    /// Codes per coefficient (2 in complex mode).
    pub fn codes_per_coefficient(&self) -> usize {
        if self.complex_mode {
            2
        } else {
            1
        }
    }

    /// Bits needed to store one code.
    pub fn bits_per_code(&self) -> u32 {
        u32::BITS - (self.levels - 1).leading_zeros()
    }

    /// Cell index of a real value; values outside `[-W, W]` land in the end cells.
    pub fn encode_component(&self, v: f64) -> u32 {
        let cell = ((v + self.half_width) / self.step()).floor();
        cell.clamp(0.0, (self.levels - 1) as f64) as u32
    }

    pub fn decode_component(&self, code: u32) -> Result<f64> {
        if code >= self.levels {
            return Err(Error::CodeOutOfRange { code, levels: self.levels });
        }
        Ok(-self.half_width + (code as f64 + 0.5) * self.step())
    }
}

pub fn has_imaginary_part(a: &[Complex64]) -> bool {
    a.iter().any(|z| z.im != 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    /// One code per coefficient, or `(re, im)` pairs in complex mode.
    pub codes: Vec<u32>,
    /// Cell midpoints.
    pub values: ComplexVector,
    /// Number of real components that fell outside `[-W, W]`.
    pub clamped: usize,
}

/// Quantizes each coefficient; real mode keeps only real parts.
pub fn quantize_coeffs(a: &[Complex64], spec: &QuantizerSpec) -> Quantized {
    let mut codes = Vec::with_capacity(a.len() * spec.codes_per_coefficient());
    let mut clamped = 0;
    let w = spec.half_width;
    let mut push = |v: f64, codes: &mut Vec<u32>| {
        if v.abs() > w {
            clamped += 1;
        }
        codes.push(spec.encode_component(v));
    };
    for z in a {
        push(z.re, &mut codes);
        if spec.complex_mode {
            push(z.im, &mut codes);
        }
    }
    let values = dequantize(&codes, spec).expect("codes produced in range");
    Quantized { codes, values, clamped }
}

/// Cell midpoints for a code stream.
pub fn dequantize(codes: &[u32], spec: &QuantizerSpec) -> Result<ComplexVector> {
    let per = spec.codes_per_coefficient();
    if !codes.len().is_multiple_of(per) {
        return Err(Error::DimensionMismatch { expected: codes.len().div_ceil(per) * per, found: codes.len() });
    }
    codes
        .chunks_exact(per)
        .map(|c| {
            let re = spec.decode_component(c[0])?;
            let im = if per == 2 { spec.decode_component(c[1])? } else { 0.0 };
            Ok(Complex64::new(re, im))
        })
        .collect()
}

/// Coefficient damage applied after (optional) quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorModel {
    QuantizeOnly,
    /// `⌊damage_fraction · N⌋` random coefficients set to zero.
    Erasure {
        damage_fraction: f64,
        seed: RngSeed,
    },
    /// `⌊damage_fraction · N⌋` random coefficients replaced by values of
    /// magnitude at most the clamp. With `worst_direction` each is replaced
    /// by `-W · a_i/|a_i|`, the farthest admissible point.
    Adversarial {
        damage_fraction: f64,
        seed: RngSeed,
        worst_direction: bool,
    },
    /// `flip_count` distinct random bits flipped in the code stream.
    BitFlip {
        flip_count: usize,
        seed: RngSeed,
    },
}

impl ErrorModel {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorModel::QuantizeOnly => "quantize",
            ErrorModel::Erasure { .. } => "erasure",
            ErrorModel::Adversarial { worst_direction: false, .. } => "adversarial",
            ErrorModel::Adversarial { worst_direction: true, .. } => "adversarial-worst",
            ErrorModel::BitFlip { .. } => "bitflip",
        }
    }

    pub fn damage_fraction(&self) -> f64 {
        match *self {
            ErrorModel::Erasure { damage_fraction, .. } | ErrorModel::Adversarial { damage_fraction, .. } => {
                damage_fraction
            }
            _ => 0.0,
        }
    }
}

/// Coefficients after a damage channel, with the touched indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Damaged {
    pub coefficients: ComplexVector,
    /// Sorted indices of modified coefficients.
    pub damaged: Vec<usize>,
}

fn pick_indices(len: usize, fraction: f64, seed: RngSeed) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidParams(format!("damage fraction must lie in [0, 1), got {fraction}")));
    }
    let count = support_size(fraction, len).min(len);
    let mut idx = index::sample(&mut seed.rng(), len, count).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

fn clamp_magnitude(z: Complex64, w: f64) -> Complex64 {
    crate::kashin::truncate_scalar(z, w)
}

/// Applies a damage channel. Untouched coefficients are returned bit-identical.
///
/// Replacement values never exceed `clamp_w` in magnitude. Bit flips need
/// the quantizer that produced the code stream; flipped codes beyond the
/// last cell saturate to it.
pub fn apply_error_model(
    a: &[Complex64],
    model: &ErrorModel,
    clamp_w: f64,
    quantizer: Option<&QuantizerSpec>,
) -> Result<Damaged> {
    let mut out = a.to_vec();
    let real = !has_imaginary_part(a) && !quantizer.is_some_and(|q| q.complex_mode());
    let damaged = match *model {
        ErrorModel::QuantizeOnly => Vec::new(),
        ErrorModel::Erasure { damage_fraction, seed } => {
            let idx = pick_indices(a.len(), damage_fraction, seed)?;
            idx.iter().for_each(|&i| out[i] = Complex64::new(0.0, 0.0));
            idx
        }
        ErrorModel::Adversarial { damage_fraction, seed, worst_direction } => {
            let idx = pick_indices(a.len(), damage_fraction, seed)?;
            let mut rng = seed.derive(1).rng();
            for &i in &idx {
                out[i] = if worst_direction {
                    let r = a[i].norm();
                    if r > 0.0 {
                        -a[i] * (clamp_w / r)
                    } else {
                        Complex64::new(-clamp_w, 0.0)
                    }
                } else if real {
                    Complex64::new(clamp_w * (2.0 * rng.random::<f64>() - 1.0), 0.0)
                } else {
                    // uniform on the disk: radius ∝ √u
                    let radius = clamp_w * rng.random::<f64>().sqrt();
                    Complex64::from_polar(radius, std::f64::consts::TAU * rng.random::<f64>())
                };
            }
            idx
        }
        ErrorModel::BitFlip { flip_count, seed } => {
            let q = quantizer.ok_or_else(|| Error::InvalidParams("bit flips need a quantizer".into()))?;
            let per = q.codes_per_coefficient();
            let bits = q.bits_per_code() as usize;
            let total = a.len() * per * bits;
            let flips = index::sample(&mut seed.rng(), total, flip_count.min(total)).into_vec();
            let mut touched: Vec<usize> = flips.iter().map(|&b| b / bits / per).collect();
            touched.sort_unstable();
            touched.dedup();
            for &i in &touched {
                let mut codes = vec![q.encode_component(a[i].re)];
                if per == 2 {
                    codes.push(q.encode_component(a[i].im));
                }
                for &b in flips.iter().filter(|&&b| b / bits / per == i) {
                    let slot = (b / bits) % per;
                    codes[slot] = (codes[slot] ^ (1 << (b % bits))).min(q.levels() - 1);
                }
                let v = dequantize(&codes, q)?[0];
                out[i] = clamp_magnitude(v, clamp_w);
            }
            touched
        }
    };
    Ok(Damaged { coefficients: out, damaged })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    /// `‖x - x̂‖`.
    pub l2_error: f64,
    pub theoretical_bound: f64,
    pub bound_satisfied: bool,
    pub damaged_count: usize,
    /// `(Σ |a_i - â_i|²)^{1/2}`.
    pub coefficient_error: f64,
}

impl DistortionReport {
    fn new(l2_error: f64, theoretical_bound: f64, damaged_count: usize, coefficient_error: f64) -> Self {
        Self {
            l2_error,
            theoretical_bound,
            bound_satisfied: l2_error <= theoretical_bound + 1e-9,
            damaged_count,
            coefficient_error,
        }
    }
}

fn diff_norm(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt()
}

/// Quantizes and/or damages a Kashin representation of `x`, reconstructs,
/// and compares the error with the a-priori bound
///
/// `(1+ε) · (√N · W_q/L · [√2] + 2W√d) + residual_bound`,
///
/// where `W = (K/√N)‖x‖` is the representation's range, `d` the number of
/// damaged coefficients and `ε` the frame's tightness (zero for tight frames).
pub fn distortion_experiment(
    frame: &FrameMatrix,
    x: &[Complex64],
    rep: &KashinRepresentation,
    quantizer: Option<&QuantizerSpec>,
    model: &ErrorModel,
) -> Result<DistortionReport> {
    if x.len() != frame.dim() {
        return Err(Error::DimensionMismatch { expected: frame.dim(), found: x.len() });
    }
    if rep.len() != frame.len() {
        return Err(Error::DimensionMismatch { expected: frame.len(), found: rep.len() });
    }
    if quantizer.is_none() && matches!(model, ErrorModel::QuantizeOnly | ErrorModel::BitFlip { .. }) {
        return Err(Error::InvalidParams(format!("model {} needs a quantizer", model.name())));
    }
    let len = frame.len() as f64;
    let range = rep.level_bound();

    let (mut coeffs, quant_term) = match quantizer {
        Some(q) => {
            let qz = quantize_coeffs(&rep.coefficients, q);
            let component = if q.complex_mode() { std::f64::consts::SQRT_2 } else { 1.0 };
            (qz.values, len.sqrt() * q.max_component_error() * component)
        }
        None => (rep.coefficients.clone(), 0.0),
    };
    let damaged = apply_error_model(&coeffs, model, range, quantizer)?;
    coeffs = damaged.coefficients;
    let damage_term = 2.0 * range * (damaged.damaged.len() as f64).sqrt();

    let x_hat = frame.synthesis(&coeffs)?;
    let l2_error = diff_norm(x, &x_hat);
    let operator_norm = 1.0 + frame.tightness_eps();
    let bound = operator_norm * (quant_term + damage_term) + rep.residual_bound;
    Ok(DistortionReport::new(l2_error, bound, damaged.damaged.len(), diff_norm(&rep.coefficients, &coeffs)))
}

/// Baseline: quantize the plain frame coefficients `<x, u_i>` over
/// `[-‖x‖, ‖x‖]` with `L` levels and report the error against `√n/L · ‖x‖`
/// (`√2` more in complex mode).
pub fn frame_baseline_quantize(frame: &FrameMatrix, x: &[Complex64], levels: u32) -> Result<DistortionReport> {
    let b = frame.analysis(x)?;
    let nx = norm2(x);
    if nx == 0.0 {
        return Ok(DistortionReport::new(0.0, 0.0, 0, 0.0));
    }
    let complex = has_imaginary_part(&b) || has_imaginary_part(x);
    let q = QuantizerSpec::new(levels, nx, complex)?;
    let qz = quantize_coeffs(&b, &q);
    let x_hat = frame.synthesis(&qz.values)?;
    let component = if complex { std::f64::consts::SQRT_2 } else { 1.0 };
    let bound = (frame.dim() as f64).sqrt() / levels as f64 * nx * component;
    Ok(DistortionReport::new(diff_norm(x, &x_hat), bound, 0, diff_norm(&b, &qz.values)))
}
