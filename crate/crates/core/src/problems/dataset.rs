use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ParamVector;
use crate::error::{Error, Result};

/// Labeled samples: one feature row per sample, one raw label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// Integer class ids, as used by [`super::dirichlet_partition`].
    pub fn class_ids(&self) -> Vec<usize> {
        let mut distinct: Vec<f64> = self.labels.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        self.labels
            .iter()
            .map(|l| distinct.partition_point(|d| d < l))
            .collect()
    }
}

/// Parses a dataset CSV: first column is the label, the rest are features.
/// A first row whose first cell is not numeric is treated as a header.
pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut width = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let first = record.get(0).unwrap_or_default();
        if line == 0 && first.parse::<f64>().is_err() {
            continue;
        }
        if record.len() < 2 {
            return Err(Error::Parse(format!(
                "row {}: need a label and at least one feature",
                line + 1
            )));
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse(format!(
                    "row {}: expected {w} columns, found {}",
                    line + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Parse(format!("row {}, column {}: not a number: {cell:?}", line + 1, col + 1)))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!(
                    "row {}, column {}: non-finite value",
                    line + 1,
                    col + 1
                )));
            }
            if col == 0 {
                labels.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let width = width.ok_or(Error::Empty("dataset CSV has no rows"))?;
    Ok(Dataset {
        features: DMatrix::from_row_slice(labels.len(), width - 1, &values),
        labels,
    })
}

pub fn read_dataset_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset_csv(&text)
}

/// Maps raw labels to +/-1. Labels already in {-1, +1} or {0, 1} map
/// directly; otherwise `positive` names the class sent to +1.
pub fn binarize_labels(labels: &[f64], positive: Option<f64>) -> Result<ParamVector> {
    if let Some(p) = positive {
        return Ok(labels
            .iter()
            .map(|&l| if l == p { 1.0 } else { -1.0 })
            .collect::<Vec<_>>()
            .into());
    }
    if labels.iter().all(|&l| l == 1.0 || l == -1.0) {
        return Ok(ParamVector::from_column_slice(labels));
    }
    if labels.iter().all(|&l| l == 0.0 || l == 1.0) {
        return Ok(labels.iter().map(|&l| 2.0 * l - 1.0).collect::<Vec<_>>().into());
    }
    Err(Error::InvalidParameter(
        "labels are not binary; choose a positive class".into(),
    ))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Two-class Gaussian mixture with unit-variance classes centred at
/// `+/- separation * u` for a random unit direction `u`. Labels are +/-1,
/// alternating so classes are balanced.
pub fn two_gaussians(m: usize, dim: usize, separation: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = unit_direction(&mut rng, dim);
    let mut features = DMatrix::zeros(m, dim);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        for j in 0..dim {
            features[(i, j)] = y * separation * dir[j] + gaussian(&mut rng);
        }
        labels.push(y);
    }
    Dataset { features, labels }
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> ParamVector {
    let v = ParamVector::from_fn(dim, |_, _| gaussian(rng));
    let norm = v.norm();
    if norm > 0.0 {
        v / norm
    } else {
        ParamVector::from_element(dim, 1.0 / (dim as f64).sqrt())
    }
}

/// Per-client two-class Gaussian data. Every client shares the global class
/// means `+/- separation * u`; client `i` additionally shifts both class
/// means by `heterogeneity * s_i` with `s_i` standard normal, so
/// `heterogeneity = 0` gives i.i.d. clients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticLogistic {
    pub samples_per_client: usize,
    pub dim: usize,
    pub separation: f64,
    pub heterogeneity: f64,
}

impl SyntheticLogistic {
    /// One dataset per client, plus one extra dataset for index `clients`
    /// drawn from the global (unshifted) distribution.
    pub fn generate(&self, clients: usize, seed: u64) -> Vec<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir = unit_direction(&mut rng, self.dim);
        (0..=clients)
            .map(|c| {
                let shift = if c < clients {
                    ParamVector::from_fn(self.dim, |_, _| self.heterogeneity * gaussian(&mut rng))
                } else {
                    ParamVector::zeros(self.dim)
                };
                let m = self.samples_per_client;
                let mut features = DMatrix::zeros(m, self.dim);
                let mut labels = Vec::with_capacity(m);
                for i in 0..m {
                    let y = if i % 2 == 0 { 1.0 } else { -1.0 };
                    for j in 0..self.dim {
                        features[(i, j)] = y * self.separation * dir[j] + shift[j] + gaussian(&mut rng);
                    }
                    labels.push(y);
                }
                Dataset { features, labels }
            })
            .collect()
    }
}
