//! CSV experiment rows.

use std::io;

use crate::error::{CliError, CliResult};

pub const HEADER: [&str; 13] = [
    "family",
    "n",
    "N",
    "up_eta",
    "up_delta",
    "K",
    "L",
    "model",
    "damage_fraction",
    "seed",
    "l2_error",
    "bound",
    "bound_ok",
];

/// One trial of a distortion or decay experiment. `levels` is 0 when no
/// quantizer was involved.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub family: String,
    pub n: usize,
    pub len: usize,
    pub up_eta: f64,
    pub up_delta: f64,
    pub level_k: f64,
    pub levels: u32,
    pub model: String,
    pub damage_fraction: f64,
    pub seed: u64,
    pub l2_error: f64,
    pub bound: f64,
    pub bound_ok: bool,
}

/// 17 significant digits, enough to recover every float64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl ExperimentRow {
    fn record(&self) -> [String; 13] {
        [
            self.family.clone(),
            self.n.to_string(),
            self.len.to_string(),
            fmt_float(self.up_eta),
            fmt_float(self.up_delta),
            fmt_float(self.level_k),
            self.levels.to_string(),
            self.model.clone(),
            fmt_float(self.damage_fraction),
            self.seed.to_string(),
            fmt_float(self.l2_error),
            fmt_float(self.bound),
            self.bound_ok.to_string(),
        ]
    }

    fn parse(rec: &csv::StringRecord) -> Result<Self, String> {
        if rec.len() != HEADER.len() {
            return Err(format!("expected {} columns, found {}", HEADER.len(), rec.len()));
        }
        fn num<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T, String> {
            rec[i].parse().map_err(|_| format!("column {}: cannot parse {:?}", HEADER[i], &rec[i]))
        }
        Ok(Self {
            family: rec[0].to_string(),
            n: num(rec, 1)?,
            len: num(rec, 2)?,
            up_eta: num(rec, 3)?,
            up_delta: num(rec, 4)?,
            level_k: num(rec, 5)?,
            levels: num(rec, 6)?,
            model: rec[7].to_string(),
            damage_fraction: num(rec, 8)?,
            seed: num(rec, 9)?,
            l2_error: num(rec, 10)?,
            bound: num(rec, 11)?,
            bound_ok: num(rec, 12)?,
        })
    }
}

pub fn write_rows<W: io::Write>(out: W, rows: &[ExperimentRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(|e| CliError::io("<csv>", e))
}

pub fn read_rows<R: io::Read>(input: R) -> CliResult<Vec<ExperimentRow>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(HEADER) {
        return Err(CliError::format("<csv>", "unexpected header"));
    }
    r.records().map(|rec| ExperimentRow::parse(&rec?).map_err(|m| CliError::format("<csv>", m))).collect()
}
