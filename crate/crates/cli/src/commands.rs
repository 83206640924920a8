use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kashin_core::kashin::truncate_scalar;
use kashin_core::linalg::{norm2, sample_gaussian};
use kashin_core::quantize::{has_imaginary_part, quantize_coeffs};
use kashin_core::uncertainty::support_size;
use kashin_core::{
    distortion_experiment, frame_baseline_quantize, gen_random_orthogonal, kashin_decode, kashin_encode,
    up_check_exact, up_estimate, ApproxTruncation, Complex64, ConversionConfig, ErrorModel, FamilyTag, FrameFamily,
    FrameMatrix, KashinRepresentation, QuantizerSpec, RngSeed, SelectorMode, Stopping, TruncationSpec, UPParams,
};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::formats::{read_kcof, read_kfrm, read_vec, write_kcof, write_kfrm, write_vec, VecFormat};
use crate::report::{write_rows, ExperimentRow};

#[derive(Debug, Parser)]
#[command(name = "kashin", version, about = "Kashin representations over tight frames")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random frame and write it as KFRM.
    GenFrame(GenFrameArgs),
    /// Print the shape and tightness of a frame.
    Info { frame: PathBuf },
    /// Compute or estimate the UP constant at a given δ.
    UpCheck(UpCheckArgs),
    /// Convert a vector into a Kashin representation.
    Encode(EncodeArgs),
    /// Reconstruct a vector from its coefficients.
    Decode(DecodeArgs),
    /// Replace coefficients by uniform quantizer midpoints.
    Quantize(QuantizeArgs),
    /// Run end-to-end distortion trials.
    Simulate(SimulateArgs),
    /// Run a predefined parameter sweep.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Orthogonal,
    Fourier,
    Gaussian,
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum SelectorArg {
    /// Keep each DFT row independently with probability n/N.
    #[default]
    Bernoulli,
    /// Keep exactly n random rows.
    Exact,
}

#[derive(Debug, Args)]
pub struct GenFrameArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long = "n")]
    pub n: usize,
    #[arg(long = "N")]
    pub len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Row selection for partial Fourier frames.
    #[arg(long, value_enum, default_value_t)]
    pub selectors: SelectorArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct UpCheckArgs {
    pub frame: PathBuf,
    #[arg(long)]
    pub delta: f64,
    /// Enumerate every support instead of sampling.
    #[arg(long, conflicts_with = "trials")]
    pub exact: bool,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Options shared by every command that runs the conversion.
#[derive(Debug, Clone, Args)]
pub struct ConversionArgs {
    #[arg(long)]
    pub eta: f64,
    #[arg(long)]
    pub delta: f64,
    /// Number of truncation passes (default 20).
    #[arg(long, conflicts_with = "accuracy")]
    pub iters: Option<usize>,
    /// Run until η'^r is at most this value.
    #[arg(long)]
    pub accuracy: Option<f64>,
    /// Keep all coefficients on the last pass.
    #[arg(long)]
    pub exact_last: bool,
    /// Approximate truncation with constants `nu,tau`.
    #[arg(long, value_parser = parse_pair)]
    pub approx_trunc: Option<(f64, f64)>,
    /// Assumed frame tightness (defaults to the measured value).
    #[arg(long)]
    pub frame_eps: Option<f64>,
}

pub const DEFAULT_ITERATIONS: usize = 20;

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `nu,tau`, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

impl ConversionArgs {
    pub fn config(&self, frame: &FrameMatrix) -> CliResult<ConversionConfig> {
        let up = UPParams::new(self.eta, self.delta)?;
        let stopping = match (self.iters, self.accuracy) {
            (_, Some(a)) => Stopping::TargetAccuracy(a),
            (r, None) => Stopping::Iterations(r.unwrap_or(DEFAULT_ITERATIONS)),
        };
        let mut cfg = ConversionConfig::new(up, DEFAULT_ITERATIONS)
            .with_stopping(stopping)
            .with_exact_last_iteration(self.exact_last)
            .with_frame_epsilon(self.frame_eps.unwrap_or(frame.tightness_eps()));
        if let Some((nu, tau)) = self.approx_trunc {
            cfg = cfg.with_truncation(TruncationSpec::Approximate(ApproxTruncation::new(nu, tau)?));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    pub frame: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: VecFormat,
    #[command(flatten)]
    pub conversion: ConversionArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    pub frame: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: VecFormat,
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub levels: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Quantize,
    Erasure,
    /// Uniform values on the clamp disk.
    Adversarial,
    /// Every damaged coefficient pushed to `-W a_i/|a_i|`.
    AdversarialWorst,
    /// Flips `⌊damage · N⌋` bits of the quantized code stream.
    Bitflip,
}

impl ModelArg {
    pub fn model(self, damage: f64, len: usize, seed: RngSeed) -> ErrorModel {
        match self {
            ModelArg::Quantize => ErrorModel::QuantizeOnly,
            ModelArg::Erasure => ErrorModel::Erasure { damage_fraction: damage, seed },
            ModelArg::Adversarial => ErrorModel::Adversarial { damage_fraction: damage, seed, worst_direction: false },
            ModelArg::AdversarialWorst => {
                ErrorModel::Adversarial { damage_fraction: damage, seed, worst_direction: true }
            }
            ModelArg::Bitflip => ErrorModel::BitFlip { flip_count: support_size(damage, len), seed },
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub frame: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: VecFormat,
    #[command(flatten)]
    pub conversion: ConversionArgs,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Quantizer levels; required by `quantize` and `bitflip`, optional otherwise.
    #[arg(long)]
    pub levels: Option<u32>,
    /// Fraction of damaged coefficients.
    #[arg(long, default_value_t = 0.0)]
    pub damage: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Residual after the requested passes against η^r.
    Decay,
    /// Quantize-only error for L ∈ {16, 64, 256} plus the plain frame baseline.
    Quantization,
    /// Adversarial damage at 1, 4 and 8 of 128 coefficients.
    Corruption,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// UP constant; calibrated with 10⁴ sampled supports plus 0.02 when omitted.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iters: usize,
}

fn kind_name(frame: &FrameMatrix) -> &'static str {
    if frame.is_partial_fourier() {
        "partial-fourier"
    } else {
        "dense"
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::GenFrame(a) => gen_frame(a, out),
        Command::Info { frame } => info(&frame, out),
        Command::UpCheck(a) => up_check(a, out),
        Command::Encode(a) => encode(a, out),
        Command::Decode(a) => decode(a, out),
        Command::Quantize(a) => quantize(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Bench(a) => bench(a, out),
    }
}

fn say(out: &mut dyn Write, line: String) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|e| CliError::io("<stdout>", e))
}

pub fn family_tag(family: FamilyArg, selectors: SelectorArg) -> FamilyTag {
    match family {
        FamilyArg::Orthogonal => FamilyTag::RandomOrthogonal,
        FamilyArg::Fourier => FamilyTag::PartialFourier(match selectors {
            SelectorArg::Bernoulli => SelectorMode::BernoulliSelectors,
            SelectorArg::Exact => SelectorMode::ExactN,
        }),
        FamilyArg::Gaussian => FamilyTag::Gaussian,
        FamilyArg::Bernoulli => FamilyTag::Bernoulli,
    }
}

fn gen_frame(a: GenFrameArgs, out: &mut dyn Write) -> CliResult<()> {
    let family = FrameFamily::new(family_tag(a.family, a.selectors), a.n, a.len, RngSeed(a.seed))?;
    let frame = family.generate()?;
    write_kfrm(&a.out, &frame)?;
    say(out, format!("n = {}", frame.dim()))?;
    say(out, format!("N = {}", frame.len()))?;
    say(out, format!("epsilon = {}", frame.tightness_eps()))
}

fn info(path: &Path, out: &mut dyn Write) -> CliResult<()> {
    let frame = read_kfrm(path)?;
    say(out, format!("n = {}", frame.dim()))?;
    say(out, format!("N = {}", frame.len()))?;
    say(out, format!("kind = {}", kind_name(&frame)))?;
    say(out, format!("epsilon = {}", frame.tightness_eps()))?;
    say(out, format!("frame_norm_sum = {}", frame.frame_norm_sum()))
}

fn up_check(a: UpCheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let frame = read_kfrm(&a.frame)?;
    let (eta, witness) = if a.exact {
        up_check_exact(&frame, a.delta)?
    } else {
        up_estimate(&frame, a.delta, a.trials, RngSeed(a.seed))?
    };
    say(out, format!("method = {}", if a.exact { "exact" } else { "estimate" }))?;
    say(out, format!("support_size = {}", witness.support.len()))?;
    say(out, format!("eta = {eta}"))?;
    say(out, format!("witness = {:?}", witness.support))
}

fn encode(a: EncodeArgs, out: &mut dyn Write) -> CliResult<()> {
    let frame = read_kfrm(&a.frame)?;
    let x = read_vec(&a.input, a.format)?;
    let cfg = a.conversion.config(&frame)?;
    let rep = kashin_encode(&frame, &x, &cfg)?;
    write_kcof(&a.out, &rep)?;
    say(out, format!("K = {}", rep.level_k))?;
    say(out, format!("iterations = {}", rep.iterations_used))?;
    say(out, format!("residual_bound = {}", rep.residual_bound))?;
    say(out, format!("max_coefficient = {}", rep.max_coefficient()))
}

fn decode(a: DecodeArgs, out: &mut dyn Write) -> CliResult<()> {
    let frame = read_kfrm(&a.frame)?;
    let rep = read_kcof(&a.input)?;
    let x = kashin_decode(&frame, &rep)?;
    write_vec(&a.out, &x, a.format)?;
    say(out, format!("n = {}", x.len()))
}

/// Quantizes the stored coefficients over their certified range.
///
/// Midpoints are pulled back onto the disk of radius `W` (a no-op in real
/// mode), so the output still satisfies the level bound; this projection
/// never moves a value away from the original coefficient. The residual
/// bound grows by the coefficient error, valid for tight frames.
pub fn quantize_representation(rep: &KashinRepresentation, levels: u32) -> CliResult<KashinRepresentation> {
    let w = rep.level_bound();
    if w == 0.0 {
        return Ok(rep.clone());
    }
    let q = QuantizerSpec::new(levels, w, has_imaginary_part(&rep.coefficients))?;
    let values: Vec<Complex64> =
        quantize_coeffs(&rep.coefficients, &q).values.into_iter().map(|z| truncate_scalar(z, w)).collect();
    let moved = rep.coefficients.iter().zip(&values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    Ok(KashinRepresentation::from_parts(values, rep.level_k, rep.input_norm, rep.residual_bound + moved)?)
}

fn quantize(a: QuantizeArgs, out: &mut dyn Write) -> CliResult<()> {
    let rep = read_kcof(&a.input)?;
    let q = quantize_representation(&rep, a.levels)?;
    write_kcof(&a.out, &q)?;
    say(out, format!("levels = {}", a.levels))?;
    say(out, format!("half_width = {}", rep.level_bound()))?;
    say(out, format!("residual_bound = {}", q.residual_bound))
}

/// Encodes `x` once and runs `trials` damage draws with seeds `seed + t`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_rows(
    family: &str,
    frame: &FrameMatrix,
    x: &[Complex64],
    cfg: &ConversionConfig,
    model: ModelArg,
    levels: Option<u32>,
    damage: f64,
    trials: usize,
    seed: u64,
) -> CliResult<Vec<ExperimentRow>> {
    let rep = kashin_encode(frame, x, cfg)?;
    trial_rows(family, frame, x, &rep, cfg, model, levels, damage, (0..trials as u64).map(|t| seed + t).collect())
}

#[allow(clippy::too_many_arguments)]
fn trial_rows(
    family: &str,
    frame: &FrameMatrix,
    x: &[Complex64],
    rep: &KashinRepresentation,
    cfg: &ConversionConfig,
    model: ModelArg,
    levels: Option<u32>,
    damage: f64,
    seeds: Vec<u64>,
) -> CliResult<Vec<ExperimentRow>> {
    if matches!(model, ModelArg::Quantize | ModelArg::Bitflip) && levels.is_none() {
        return Err(CliError::Usage(format!("--levels is required for model {model:?}")));
    }
    let quantizer = levels.map(|l| QuantizerSpec::for_representation(rep, l)).transpose()?;
    seeds
        .into_par_iter()
        .map(|s| {
            let m = model.model(damage, frame.len(), RngSeed(s));
            let r = distortion_experiment(frame, x, rep, quantizer.as_ref(), &m)?;
            Ok(ExperimentRow {
                family: family.to_string(),
                n: frame.dim(),
                len: frame.len(),
                up_eta: cfg.up.eta(),
                up_delta: cfg.up.delta(),
                level_k: rep.level_k,
                levels: levels.unwrap_or(0),
                model: m.name().to_string(),
                damage_fraction: damage,
                seed: s,
                l2_error: r.l2_error,
                bound: r.theoretical_bound,
                bound_ok: r.bound_satisfied,
            })
        })
        .collect()
}

fn write_csv(path: &Path, rows: &[ExperimentRow]) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_rows(std::io::BufWriter::new(file), rows)
}

fn summarize(out: &mut dyn Write, rows: &[ExperimentRow]) -> CliResult<()> {
    let violations = rows.iter().filter(|r| !r.bound_ok).count();
    let worst = rows.iter().map(|r| r.l2_error).fold(0.0, f64::max);
    say(out, format!("rows = {}", rows.len()))?;
    say(out, format!("bound_violations = {violations}"))?;
    say(out, format!("max_l2_error = {worst}"))
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let frame = read_kfrm(&a.frame)?;
    let x = read_vec(&a.input, a.format)?;
    let cfg = a.conversion.config(&frame)?;
    let rows = simulate_rows(kind_name(&frame), &frame, &x, &cfg, a.model, a.levels, a.damage, a.trials, a.seed)?;
    write_csv(&a.csv, &rows)?;
    summarize(out, &rows)
}

fn unit_vector(n: usize, seed: u64) -> Vec<Complex64> {
    let g = sample_gaussian(1, n, RngSeed(seed)).into_vec();
    let s = norm2(&g);
    g.into_iter().map(|z| z / s).collect()
}

/// Rows for one bench suite on a random orthogonal 64 x 128 frame. Trial
/// `t` uses the real unit vector drawn from seed `seed + t`.
pub fn bench_rows(a: &BenchArgs) -> CliResult<Vec<ExperimentRow>> {
    const FAMILY: &str = "orthogonal";
    let frame = gen_random_orthogonal(64, 128, RngSeed(a.seed))?;
    let eta = match a.eta {
        Some(e) => e,
        None => up_estimate(&frame, a.delta, 10_000, RngSeed(a.seed))?.0 + 0.02,
    };
    let cfg = ConversionConfig::new(UPParams::new(eta, a.delta)?, a.iters).with_frame_epsilon(frame.tightness_eps());
    let seeds: Vec<u64> = (0..a.trials as u64).map(|t| a.seed + t).collect();
    let encoded: Vec<(Vec<Complex64>, KashinRepresentation)> = seeds
        .par_iter()
        .map(|&s| {
            let x = unit_vector(64, s);
            kashin_encode(&frame, &x, &cfg).map(|rep| (x, rep))
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    match a.suite {
        Suite::Decay => {
            let bound = cfg.adjusted_eta().powi(cfg.iterations() as i32);
            for ((x, rep), &s) in encoded.iter().zip(&seeds) {
                let back = kashin_decode(&frame, rep)?;
                let err = x.iter().zip(&back).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
                rows.push(ExperimentRow {
                    family: FAMILY.into(),
                    n: 64,
                    len: 128,
                    up_eta: eta,
                    up_delta: a.delta,
                    level_k: rep.level_k,
                    levels: 0,
                    model: "decay".into(),
                    damage_fraction: 0.0,
                    seed: s,
                    l2_error: err,
                    bound,
                    bound_ok: err <= bound + 1e-9,
                });
            }
        }
        Suite::Quantization => {
            for levels in [16u32, 64, 256] {
                for ((x, rep), &s) in encoded.iter().zip(&seeds) {
                    rows.extend(trial_rows(
                        FAMILY,
                        &frame,
                        x,
                        rep,
                        &cfg,
                        ModelArg::Quantize,
                        Some(levels),
                        0.0,
                        vec![s],
                    )?);
                    let b = frame_baseline_quantize(&frame, x, levels)?;
                    rows.push(ExperimentRow {
                        family: FAMILY.into(),
                        n: 64,
                        len: 128,
                        up_eta: eta,
                        up_delta: a.delta,
                        level_k: 1.0,
                        levels,
                        model: "frame-baseline".into(),
                        damage_fraction: 0.0,
                        seed: s,
                        l2_error: b.l2_error,
                        bound: b.theoretical_bound,
                        bound_ok: b.bound_satisfied,
                    });
                }
            }
        }
        Suite::Corruption => {
            for d in [1.0, 4.0, 8.0] {
                for model in [ModelArg::Adversarial, ModelArg::AdversarialWorst] {
                    for ((x, rep), &s) in encoded.iter().zip(&seeds) {
                        rows.extend(trial_rows(FAMILY, &frame, x, rep, &cfg, model, None, d / 128.0, vec![s])?);
                    }
                }
            }
        }
    }
    Ok(rows)
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    let rows = bench_rows(&a)?;
    write_csv(&a.csv, &rows)?;
    summarize(out, &rows)
}
