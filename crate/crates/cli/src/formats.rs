//! On-disk formats: KFRM frames, KCOF coefficient sets and `.vec` vectors.
//!
//! All binary fields are little-endian; complex numbers are stored as
//! `(re, im)` float64 pairs.

use std::fs;
use std::path::Path;

use kashin_core::linalg::ComplexMatrix;
use kashin_core::{Complex64, FrameKind, FrameMatrix, KashinRepresentation};

use crate::error::{CliError, CliResult};

pub const KFRM_MAGIC: &[u8; 4] = b"KFRM";
pub const KCOF_MAGIC: &[u8; 4] = b"KCOF";
pub const FORMAT_VERSION: u16 = 1;

const KIND_DENSE: u8 = 0;
const KIND_PARTIAL_FOURIER: u8 = 1;

/// Malformed file contents; the caller attaches the path.
#[derive(Debug, Clone, PartialEq)]
pub struct FormatError(pub String);

type FmtResult<T> = Result<T, FormatError>;

fn bad<T>(msg: impl Into<String>) -> FmtResult<T> {
    Err(FormatError(msg.into()))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take<const K: usize>(&mut self, what: &str) -> FmtResult<[u8; K]> {
        let end = self.pos + K;
        if end > self.buf.len() {
            return bad(format!("truncated file while reading {what} at byte {}", self.pos));
        }
        let out = self.buf[self.pos..end].try_into().expect("slice of length K");
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self, what: &str) -> FmtResult<u8> {
        Ok(self.take::<1>(what)?[0])
    }

    fn u16(&mut self, what: &str) -> FmtResult<u16> {
        Ok(u16::from_le_bytes(self.take(what)?))
    }

    fn u32(&mut self, what: &str) -> FmtResult<u32> {
        Ok(u32::from_le_bytes(self.take(what)?))
    }

    fn f64(&mut self, what: &str) -> FmtResult<f64> {
        Ok(f64::from_le_bytes(self.take(what)?))
    }

    fn complex(&mut self, what: &str) -> FmtResult<Complex64> {
        Ok(Complex64::new(self.f64(what)?, self.f64(what)?))
    }

    fn header(&mut self, magic: &[u8; 4]) -> FmtResult<()> {
        let m = self.take::<4>("magic")?;
        if &m != magic {
            return bad(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&m),
                String::from_utf8_lossy(magic)
            ));
        }
        let v = self.u16("version")?;
        if v != FORMAT_VERSION {
            return bad(format!("unsupported version {v}"));
        }
        Ok(())
    }

    /// Checks the payload size announced by the header before allocating.
    fn expect_remaining(&self, bytes: u64) -> FmtResult<()> {
        let left = (self.buf.len() - self.pos) as u64;
        if left != bytes {
            return bad(format!("payload is {left} bytes, header implies {bytes}"));
        }
        Ok(())
    }
}

fn put_complex(out: &mut Vec<u8>, z: &Complex64) {
    out.extend_from_slice(&z.re.to_le_bytes());
    out.extend_from_slice(&z.im.to_le_bytes());
}

fn to_u32(v: usize, what: &str) -> FmtResult<u32> {
    u32::try_from(v).or_else(|_| bad(format!("{what} = {v} does not fit in u32")))
}

pub fn encode_kfrm(frame: &FrameMatrix) -> FmtResult<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(KFRM_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let (kind, n, len) = match frame.kind() {
        FrameKind::Dense(_) => (KIND_DENSE, frame.dim(), frame.len()),
        FrameKind::PartialFourier { .. } => (KIND_PARTIAL_FOURIER, frame.dim(), frame.len()),
    };
    out.push(kind);
    out.extend_from_slice(&to_u32(n, "n")?.to_le_bytes());
    out.extend_from_slice(&to_u32(len, "N")?.to_le_bytes());
    match frame.kind() {
        FrameKind::Dense(m) => m.as_slice().iter().for_each(|z| put_complex(&mut out, z)),
        FrameKind::PartialFourier { rows, .. } => {
            for &r in rows {
                out.extend_from_slice(&to_u32(r, "row index")?.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode_kfrm(bytes: &[u8]) -> FmtResult<FrameMatrix> {
    let mut c = Cursor::new(bytes);
    c.header(KFRM_MAGIC)?;
    let kind = c.u8("kind")?;
    let n = c.u32("n")? as usize;
    let len = c.u32("N")? as usize;
    if n == 0 || n > len {
        return bad(format!("need 1 <= n <= N, got n={n} N={len}"));
    }
    let frame = match kind {
        KIND_DENSE => {
            c.expect_remaining(16 * n as u64 * len as u64)?;
            let data = (0..n * len).map(|_| c.complex("matrix entry")).collect::<FmtResult<Vec<_>>>()?;
            let m = ComplexMatrix::new(n, len, data).map_err(|e| FormatError(e.to_string()))?;
            FrameMatrix::from_dense(m)
        }
        KIND_PARTIAL_FOURIER => {
            c.expect_remaining(4 * n as u64)?;
            let rows = (0..n).map(|_| c.u32("row index").map(|r| r as usize)).collect::<FmtResult<Vec<_>>>()?;
            FrameMatrix::partial_fourier(len, rows)
        }
        k => return bad(format!("unknown frame kind {k}")),
    };
    frame.map_err(|e| FormatError(e.to_string()))
}

pub fn encode_kcof(rep: &KashinRepresentation) -> FmtResult<Vec<u8>> {
    let mut out = Vec::with_capacity(34 + 16 * rep.len());
    out.extend_from_slice(KCOF_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&to_u32(rep.len(), "N")?.to_le_bytes());
    for v in [rep.level_k, rep.input_norm, rep.residual_bound] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    rep.coefficients.iter().for_each(|z| put_complex(&mut out, z));
    Ok(out)
}

/// Parses a KCOF payload and re-checks `max |a_i| ≤ (K/√N) ‖x‖`.
pub fn decode_kcof(bytes: &[u8]) -> FmtResult<KashinRepresentation> {
    let mut c = Cursor::new(bytes);
    c.header(KCOF_MAGIC)?;
    let len = c.u32("N")? as usize;
    let level_k = c.f64("level_K")?;
    let input_norm = c.f64("input_norm")?;
    let residual_bound = c.f64("residual_bound")?;
    if [level_k, input_norm, residual_bound].iter().any(|v| !v.is_finite() || *v < 0.0) {
        return bad("header scalars must be finite and non-negative");
    }
    c.expect_remaining(16 * len as u64)?;
    let coeffs = (0..len).map(|_| c.complex("coefficient")).collect::<FmtResult<Vec<_>>>()?;
    KashinRepresentation::from_parts(coeffs, level_k, input_norm, residual_bound)
        .map_err(|e| FormatError(e.to_string()))
}

/// Layout of `.vec` files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum VecFormat {
    /// One `re im` pair per line.
    #[default]
    Ascii,
    /// Raw little-endian float64 pairs.
    Bin,
}

pub fn encode_vec(x: &[Complex64], format: VecFormat) -> Vec<u8> {
    match format {
        VecFormat::Ascii => x.iter().map(|z| format!("{:.16e} {:.16e}\n", z.re, z.im)).collect::<String>().into_bytes(),
        VecFormat::Bin => {
            let mut out = Vec::with_capacity(16 * x.len());
            x.iter().for_each(|z| put_complex(&mut out, z));
            out
        }
    }
}

/// ASCII lines hold `re im` or just `re`; blank lines and `#` comments are skipped.
pub fn decode_vec(bytes: &[u8], format: VecFormat) -> FmtResult<Vec<Complex64>> {
    match format {
        VecFormat::Bin => {
            if !bytes.len().is_multiple_of(16) {
                return bad(format!("binary vector length {} is not a multiple of 16", bytes.len()));
            }
            let mut c = Cursor::new(bytes);
            (0..bytes.len() / 16).map(|_| c.complex("entry")).collect()
        }
        VecFormat::Ascii => {
            let text = std::str::from_utf8(bytes).or_else(|_| bad("vector file is not UTF-8"))?;
            let mut out = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let parse =
                    |s: &str| s.parse::<f64>().or_else(|_| bad(format!("line {}: cannot parse {s:?}", lineno + 1)));
                let fields: Vec<&str> = line.split_whitespace().collect();
                let z = match fields.as_slice() {
                    [re] => Complex64::new(parse(re)?, 0.0),
                    [re, im] => Complex64::new(parse(re)?, parse(im)?),
                    _ => return bad(format!("line {}: expected `re im`", lineno + 1)),
                };
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return bad(format!("line {}: non-finite value", lineno + 1));
                }
                out.push(z);
            }
            Ok(out)
        }
    }
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn attach<T>(path: &Path, r: FmtResult<T>) -> CliResult<T> {
    r.map_err(|FormatError(m)| CliError::format(path, m))
}

pub fn read_kfrm(path: &Path) -> CliResult<FrameMatrix> {
    attach(path, decode_kfrm(&read_bytes(path)?))
}

pub fn write_kfrm(path: &Path, frame: &FrameMatrix) -> CliResult<()> {
    write_bytes(path, &attach(path, encode_kfrm(frame))?)
}

pub fn read_kcof(path: &Path) -> CliResult<KashinRepresentation> {
    attach(path, decode_kcof(&read_bytes(path)?))
}

pub fn write_kcof(path: &Path, rep: &KashinRepresentation) -> CliResult<()> {
    write_bytes(path, &attach(path, encode_kcof(rep))?)
}

pub fn read_vec(path: &Path, format: VecFormat) -> CliResult<Vec<Complex64>> {
    attach(path, decode_vec(&read_bytes(path)?, format))
}

pub fn write_vec(path: &Path, x: &[Complex64], format: VecFormat) -> CliResult<()> {
    write_bytes(path, &encode_vec(x, format))
}
