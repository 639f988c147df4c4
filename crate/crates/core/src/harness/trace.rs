use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "round,loss_gap,grad_norm,dist_to_opt,oracle_err_sq,lemma1_bound,inner_iters,wall_ms";

/// Metrics of the iterate queried at one communication round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    /// `L_H(x_k) - L_H(x*)`.
    pub loss_gap: f64,
    /// `||grad L_H(x_k)||`.
    pub grad_norm: f64,
    pub dist_to_opt: f64,
    /// `||g_tilde - grad L_H(x_k)||^2` of this round's oracle sample.
    pub oracle_err_sq: f64,
    /// Robust-aggregation error budget at `x_k`; NaN when not audited.
    pub lemma1_bound: f64,
    /// Inner solver iterations spent after this round (PIGS only).
    pub inner_iters: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub label: String,
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn loss_gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.loss_gap)
    }

    /// First round whose loss gap is at most `target`.
    pub fn rounds_to(&self, target: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.loss_gap <= target).map(|r| r.round)
    }

    /// Asymptotic error estimate: the largest loss gap over the final
    /// `fraction` of the rounds.
    pub fn plateau(&self, fraction: f64) -> f64 {
        if self.rows.is_empty() {
            return f64::NAN;
        }
        let tail = ((self.rows.len() as f64 * fraction).ceil() as usize).clamp(1, self.rows.len());
        self.rows[self.rows.len() - tail..]
            .iter()
            .map(|r| r.loss_gap)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(CSV_HEADER.split(','))?;
        for r in &self.rows {
            w.write_record([
                r.round.to_string(),
                fmt_f64(r.loss_gap),
                fmt_f64(r.grad_norm),
                fmt_f64(r.dist_to_opt),
                fmt_f64(r.oracle_err_sq),
                fmt_f64(r.lemma1_bound),
                r.inner_iters.to_string(),
                fmt_f64(r.wall_ms),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Parses the CSV written by [`RunTrace::write_csv`].
    pub fn parse_csv(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if header.join(",") != CSV_HEADER {
            return Err(Error::Parse(format!("unexpected trace header {:?}", header.join(","))));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let field = |j: usize| record.get(j).unwrap_or_default();
            let real = |j: usize| -> Result<f64> {
                field(j)
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {:?}", i + 2, field(j))))
            };
            let int = |j: usize| -> Result<usize> {
                field(j)
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("line {}: bad integer {:?}", i + 2, field(j))))
            };
            rows.push(TraceRow {
                round: int(0)?,
                loss_gap: real(1)?,
                grad_norm: real(2)?,
                dist_to_opt: real(3)?,
                oracle_err_sq: real(4)?,
                lemma1_bound: real(5)?,
                inner_iters: int(6)?,
                wall_ms: real(7)?,
            });
        }
        Ok(Self {
            label: label.into(),
            rows,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse_csv(&text, label)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Shortest representation that parses back to the same value.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:e}")
    }
}
