//! Kashin representations over tight frames.
//!
//! A vector `x ∈ Cⁿ` is expanded in an `N`-element tight frame so that every
//! coefficient is bounded by `(K/√N)‖x‖`. The energy is spread evenly, which
//! makes the coefficients cheap to quantize and robust to damage.
//!
//! ```
//! use kashin_core::{gen_random_orthogonal, kashin_encode, kashin_decode, ConversionConfig, RngSeed, UPParams};
//! use kashin_core::linalg::{norm2, sample_gaussian};
//!
//! let frame = gen_random_orthogonal(16, 32, RngSeed(1)).unwrap();
//! let x = sample_gaussian(1, 16, RngSeed(2)).into_vec();
//! let cfg = ConversionConfig::new(UPParams::new(0.6, 0.125).unwrap(), 30);
//! let rep = kashin_encode(&frame, &x, &cfg).unwrap();
//! assert!(rep.satisfies_level_bound());
//! let y = kashin_decode(&frame, &rep).unwrap();
//! let err: Vec<_> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
//! assert!(norm2(&err) <= rep.residual_bound);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod frames;
pub mod kashin;
pub mod linalg;
pub mod quantize;
pub mod uncertainty;

pub use error::{Error, Result};
pub use frames::{
    gen_partial_fourier, gen_random_orthogonal, gen_subgaussian, FamilyTag, FrameFamily, FrameKind, FrameMatrix,
    SelectorMode, SubgaussianDist,
};
pub use kashin::{
    kashin_decode, kashin_encode, ApproxTruncation, ConversionConfig, KashinRepresentation, Stopping, TruncationSpec,
};
pub use linalg::{Complex64, ComplexMatrix, ComplexVector, RngSeed};
pub use quantize::{
    apply_error_model, distortion_experiment, frame_baseline_quantize, quantize_coeffs, DistortionReport, ErrorModel,
    QuantizerSpec,
};
pub use uncertainty::{kashin_level, up_check_exact, up_estimate, uup_to_up, UPParams, UPWitness};
