//! Uncertainty principle parameters of a frame matrix.
//!
//! `U` satisfies UP(η, δ) when every `x ∈ C^N` supported on at most `δN`
//! coordinates has `‖U x‖ ≤ η ‖x‖`. The tightest such `η` is the largest
//! operator norm of a column submatrix `U_Ω` with `|Ω| = ⌊δN⌋`, which
//! [`up_check_exact`] finds by enumeration and [`up_estimate`] bounds from
//! below by sampling supports.

use std::cmp::Ordering;

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{FamilyTag, FrameFamily, FrameMatrix};
use crate::linalg::{matvec, norm2, power_iteration, top_singular_pair, Complex64, ComplexVector, RngSeed};

/// Maximum number of supports [`up_check_exact`] will enumerate.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

/// Supports up to this width use an exact eigen-solve in [`up_estimate`];
/// wider ones fall back to power iteration.
pub const EXACT_WIDTH_LIMIT: usize = 32;

pub const POWER_ITERATIONS: usize = 50;
pub const POWER_TOLERANCE: f64 = 1e-8;

/// Uncertainty principle parameters, both strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UPParams {
    eta: f64,
    delta: f64,
}

impl UPParams {
    pub fn new(eta: f64, delta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidParams(format!("eta must lie in (0, 1), got {eta}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParams(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { eta, delta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// A sparse vector that realizes (or nearly realizes) the worst ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct UPWitness {
    /// Sorted support `Ω`.
    pub support: Vec<usize>,
    /// Length-`N` vector vanishing off `support`.
    pub vector: ComplexVector,
    /// `‖U vector‖ / ‖vector‖`.
    pub ratio: f64,
}

impl UPWitness {
    /// Recomputes `‖U v‖ / ‖v‖` through the frame's synthesis operator.
    pub fn recompute_ratio(&self, frame: &FrameMatrix) -> Result<f64> {
        Ok(norm2(&frame.synthesis(&self.vector)?) / norm2(&self.vector))
    }
}

/// Support size `⌊δN⌋`. A `1e-9` guard absorbs round-off in products such as
/// `0.29 * 100`.
pub fn support_size(delta: f64, len: usize) -> usize {
    (delta * len as f64 + 1e-9).floor().max(0.0) as usize
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Best candidate seen so far: larger ratio wins, ties go to the
/// lexicographically smaller support so parallel reductions are deterministic.
#[derive(Debug, Clone)]
struct Candidate {
    sigma: f64,
    support: Vec<usize>,
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    match a.sigma.total_cmp(&b.sigma) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if a.support <= b.support {
                a
            } else {
                b
            }
        }
    }
}

fn exact_norm(frame: &FrameMatrix, support: &[usize]) -> f64 {
    top_singular_pair(&frame.columns(support)).0
}

fn witness_for(frame: &FrameMatrix, support: Vec<usize>) -> UPWitness {
    let (_, v) = top_singular_pair(&frame.columns(&support));
    let mut vector = vec![Complex64::new(0.0, 0.0); frame.len()];
    for (&i, &vi) in support.iter().zip(&v) {
        vector[i] = vi;
    }
    let ratio = norm2(&frame.synthesis(&vector).expect("length N")) / norm2(&vector);
    UPWitness { support, vector, ratio }
}

fn checked_support_size(frame: &FrameMatrix, delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParams(format!("delta must lie in (0, 1], got {delta}")));
    }
    let k = support_size(delta, frame.len());
    if k == 0 {
        return Err(Error::InvalidParams(format!("delta = {delta} gives empty supports for N = {}", frame.len())));
    }
    Ok(k)
}

/// Lexicographic successor of a `k`-combination of `0..n`; false when exhausted.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The `rank`-th `k`-combination of `0..n` in lexicographic order.
fn unrank_combination(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let remaining = k - slot;
        loop {
            let block = binomial(n - next - 1, remaining - 1);
            if rank < block {
                break;
            }
            rank -= block;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Exact UP constant: the largest `‖U_Ω‖` over all supports of size `⌊δN⌋`.
///
/// Returns that norm and a witness built from the top right singular vector
/// of the winning submatrix.
pub fn up_check_exact(frame: &FrameMatrix, delta: f64) -> Result<(f64, UPWitness)> {
    let len = frame.len();
    let k = checked_support_size(frame, delta)?;
    let supports = binomial(len, k);
    if supports > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { supports, budget: ENUMERATION_BUDGET });
    }
    const CHUNK: u128 = 2048;
    let chunks = supports.div_ceil(CHUNK) as u64;
    let best = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk as u128 * CHUNK;
            let end = (start + CHUNK).min(supports);
            let mut c = unrank_combination(len, k, start);
            let mut best = Candidate { sigma: exact_norm(frame, &c), support: c.clone() };
            for _ in start + 1..end {
                next_combination(&mut c, len);
                let sigma = exact_norm(frame, &c);
                if sigma > best.sigma {
                    best = Candidate { sigma, support: c.clone() };
                }
            }
            best
        })
        .reduce_with(better)
        .expect("at least one support");
    let eta = best.sigma;
    Ok((eta, witness_for(frame, best.support)))
}

/// Randomized lower bound on the exact UP constant from `trials` uniformly
/// drawn supports of size `⌊δN⌋`. Trial `t` draws from seed `seed + t`.
pub fn up_estimate(frame: &FrameMatrix, delta: f64, trials: usize, seed: RngSeed) -> Result<(f64, UPWitness)> {
    let len = frame.len();
    let k = checked_support_size(frame, delta)?;
    if trials == 0 {
        return Err(Error::InvalidParams("up_estimate needs at least one trial".into()));
    }
    let best = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.derive(t).rng();
            let mut support = index::sample(&mut rng, len, k).into_vec();
            support.sort_unstable();
            let sigma = if k <= EXACT_WIDTH_LIMIT {
                exact_norm(frame, &support)
            } else {
                let sub = frame.columns(&support);
                let start: Vec<Complex64> =
                    crate::linalg::sample_gaussian(1, k, seed.derive(t).derive(1 << 32)).into_vec();
                power_iteration(&sub, &start, POWER_ITERATIONS, POWER_TOLERANCE).map(|(s, _)| s).unwrap_or(0.0)
            };
            Candidate { sigma, support }
        })
        .reduce_with(better)
        .expect("trials >= 1");
    let witness = if k <= EXACT_WIDTH_LIMIT {
        witness_for(frame, best.support)
    } else {
        power_witness(frame, best.support, seed)
    };
    let eta = if k <= EXACT_WIDTH_LIMIT { best.sigma } else { witness.ratio.max(best.sigma) };
    Ok((eta, witness))
}

fn power_witness(frame: &FrameMatrix, support: Vec<usize>, seed: RngSeed) -> UPWitness {
    let sub = frame.columns(&support);
    let start = crate::linalg::sample_gaussian(1, support.len(), seed.derive(u64::MAX)).into_vec();
    let (_, v) = power_iteration(&sub, &start, POWER_ITERATIONS, POWER_TOLERANCE).expect("nonzero start");
    let mut vector = vec![Complex64::new(0.0, 0.0); frame.len()];
    for (&i, &vi) in support.iter().zip(&v) {
        vector[i] = vi;
    }
    let ratio = norm2(&matvec(&sub, &v).expect("shape")) / norm2(&v);
    UPWitness { support, vector, ratio }
}

/// UP parameters implied by a UUP with constants `(ε, δ)` on an `n x N`
/// matrix with orthonormal rows: `η = (1+ε)/(1-ε) · √(n/N)`.
pub fn uup_to_up(epsilon: f64, delta: f64, n: usize, len: usize) -> Result<UPParams> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParams(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    if n == 0 || n > len {
        return Err(Error::InvalidParams(format!("need 1 <= n <= N, got n={n} N={len}")));
    }
    let eta = (1.0 + epsilon) / (1.0 - epsilon) * (n as f64 / len as f64).sqrt();
    // values within round-off of 1 (e.g. ε = 1/3, n/N = 1/4) count as 1
    if eta >= 1.0 - 1e-12 {
        return Err(Error::InvalidParams(format!("implied eta = {eta} is not below 1")));
    }
    UPParams::new(eta, delta)
}

/// Kashin level `K = (1-η)^{-1} δ^{-1/2}` reached by the conversion algorithm.
pub fn kashin_level(p: &UPParams) -> f64 {
    1.0 / ((1.0 - p.eta) * p.delta.sqrt())
}

/// The η promised for a random family, `1 - μ/4` with `N = (1+μ) n`.
///
/// Only the random orthogonal and partial Fourier families carry such a
/// value, and only while it stays in `(0, 1)` (partial Fourier also needs
/// `μ ≤ 1`). The matching δ hides an unknown absolute constant, so the value
/// is advisory. Subgaussian families return `None`.
pub fn theoretical_eta(family: &FrameFamily) -> Option<f64> {
    let mu = family.len as f64 / family.n as f64 - 1.0;
    let eta = 1.0 - mu / 4.0;
    match family.tag {
        FamilyTag::RandomOrthogonal if mu > 0.0 && eta > 0.0 => Some(eta),
        FamilyTag::PartialFourier(_) if mu > 0.0 && mu <= 1.0 => Some(eta),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{gen_random_orthogonal, SelectorMode};
    use crate::linalg::ComplexMatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        for (rank, comb) in all.iter().enumerate() {
            assert_eq!(&unrank_combination(4, 2, rank as u128), comb);
        }
        assert_eq!(binomial(16, 2), 120);
        assert_eq!(binomial(128, 6), 5_423_611_200);
    }

    #[test]
    fn two_equal_columns() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = FrameMatrix::from_dense(ComplexMatrix::new(1, 2, vec![c(s), c(s)]).unwrap()).unwrap();
        let (eta, w) = up_check_exact(&f, 0.5).unwrap();
        assert!((eta - s).abs() < 1e-12);
        assert_eq!(w.support, vec![0]);
    }

    #[test]
    fn repeated_basis() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = ComplexMatrix::from_fn(2, 4, |i, j| if j % 2 == i { c(s) } else { c(0.0) });
        let f = FrameMatrix::from_dense(m).unwrap();
        assert!(f.tightness_eps() < 1e-12);
        let (eta, _) = up_check_exact(&f, 0.25).unwrap();
        assert!((eta - s).abs() < 1e-12);
    }

    #[test]
    fn estimate_with_all_supports_matches_exact() {
        let f = gen_random_orthogonal(8, 16, RngSeed(21)).unwrap();
        let delta = 2.0 / 16.0;
        let (exact, wx) = up_check_exact(&f, delta).unwrap();
        let (est, we) = up_estimate(&f, delta, 5000, RngSeed(3)).unwrap();
        assert_eq!(est, exact);
        assert_eq!(wx.support, we.support);
        assert!((wx.recompute_ratio(&f).unwrap() - wx.ratio).abs() < 1e-9);
        let (small, _) = up_estimate(&f, delta, 5, RngSeed(3)).unwrap();
        assert!(small <= exact + 1e-8);
    }

    #[test]
    fn budget_and_degenerate_delta() {
        let f = gen_random_orthogonal(16, 64, RngSeed(1)).unwrap();
        assert!(matches!(up_check_exact(&f, 0.25), Err(Error::BudgetExceeded { .. })));
        assert!(up_check_exact(&f, 0.01).is_err());
        assert!(up_estimate(&f, 0.01, 10, RngSeed(1)).is_err());
    }

    #[test]
    fn wide_supports_use_power_iteration() {
        let f = crate::frames::gen_partial_fourier(128, 64, RngSeed(2), SelectorMode::ExactN).unwrap();
        let (eta, w) = up_estimate(&f, 0.3, 20, RngSeed(9)).unwrap();
        assert_eq!(w.support.len(), 38);
        assert!(eta > 0.0 && eta <= 1.0 + 1e-12);
        let exact = top_singular_pair(&f.columns(&w.support)).0;
        assert!(eta <= exact + 1e-8);
        assert!((w.recompute_ratio(&f).unwrap() - w.ratio).abs() < 1e-9);
    }

    #[test]
    fn uup_formula() {
        let p = uup_to_up(1e-12, 0.1, 64, 128).unwrap();
        assert!((p.eta() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(uup_to_up(1.0 / 3.0, 0.1, 32, 128).is_err());
        let p = uup_to_up(0.1, 0.1, 64, 128).unwrap();
        // 1.1/0.9 * sqrt(0.5) by hand: 1.2222... * 0.70710678 = 0.86424162
        assert!((p.eta() - 0.864_241_62).abs() < 1e-7);
    }

    #[test]
    fn level_formula() {
        assert!((kashin_level(&UPParams::new(0.5, 0.25).unwrap()) - 4.0).abs() < 1e-12);
        let k = kashin_level(&UPParams::new(std::f64::consts::FRAC_1_SQRT_2, 0.5).unwrap());
        // (1 - 0.70710678)^-1 * 0.5^-1/2 = 3.41421356 * 1.41421356
        assert!((k - 4.828_427_12).abs() < 1e-7);
        assert!(UPParams::new(0.0, 1.0).is_err());
        assert!(UPParams::new(0.5, 1.0).is_err());
    }

    #[test]
    fn theoretical_values() {
        let fam = |tag, n, len| FrameFamily::new(tag, n, len, RngSeed(0)).unwrap();
        assert_eq!(theoretical_eta(&fam(FamilyTag::RandomOrthogonal, 64, 128)), Some(0.75));
        assert_eq!(theoretical_eta(&fam(FamilyTag::RandomOrthogonal, 64, 96)), Some(0.875));
        assert_eq!(theoretical_eta(&fam(FamilyTag::PartialFourier(SelectorMode::ExactN), 64, 128)), Some(0.75));
        assert_eq!(theoretical_eta(&fam(FamilyTag::Gaussian, 64, 128)), None);
        assert_eq!(theoretical_eta(&fam(FamilyTag::Bernoulli, 64, 128)), None);
        assert_eq!(theoretical_eta(&fam(FamilyTag::RandomOrthogonal, 64, 64)), None);
    }
}
