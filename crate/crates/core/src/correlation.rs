//! Pearson cross-correlation matrices.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::SignalMatrix;

/// Symmetric N×N correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    labels: Vec<String>,
    values: DMatrix<f64>,
    sample_length: usize,
}

impl CorrelationMatrix {
    /// Wraps an existing matrix after checking symmetry, unit diagonal and range.
    pub fn from_matrix(
        labels: Vec<String>,
        values: DMatrix<f64>,
        sample_length: usize,
    ) -> Result<Self> {
        let n = labels.len();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::Size(format!(
                "{}x{} matrix for {n} labels",
                values.nrows(),
                values.ncols()
            )));
        }
        for i in 0..n {
            if values[(i, i)] != 1.0 {
                return Err(Error::Validation(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                let v = values[(i, j)];
                if (v - values[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Validation(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
                if !(v.abs() <= 1.0 + 1e-12) {
                    return Err(Error::Validation(format!(
                        "entry ({i}, {j}) = {v} outside [-1, 1]"
                    )));
                }
            }
        }
        Ok(Self {
            labels,
            values,
            sample_length,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of time steps the matrix was estimated from.
    pub fn sample_length(&self) -> usize {
        self.sample_length
    }

    /// Writes the matrix as CSV with a label header row and label column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Validation(format!("csv write failed: {e}"));
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header).map_err(io)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend((0..self.n()).map(|j| format!("{:?}", self.values[(i, j)])));
            w.write_record(&row).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::Validation(format!("csv write failed: {e}")))
    }
}

/// Pearson correlation of every pair of rows.
///
/// Rows are centered and scaled to unit population variance, then
/// `C = X Xᵀ / T`. Every pair is summed sequentially over time, so the
/// result does not depend on how rows are scheduled across threads.
pub fn pearson(signal: &SignalMatrix) -> Result<CorrelationMatrix> {
    let n = signal.n_series();
    let t = signal.len();
    if t < 2 {
        return Err(Error::Size(format!("need at least 2 time steps, got {t}")));
    }
    let standardized = signal
        .rows()
        .iter()
        .zip(signal.labels())
        .map(|(row, label)| {
            standardize(row).ok_or_else(|| Error::DegenerateSeries {
                label: label.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let tf = t as f64;
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    let dot: f64 = standardized[i]
                        .iter()
                        .zip(&standardized[j])
                        .map(|(a, b)| a * b)
                        .sum();
                    (dot / tf).clamp(-1.0, 1.0)
                })
                .collect()
        })
        .collect();

    let mut values = DMatrix::identity(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let j = i + 1 + k;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(CorrelationMatrix {
        labels: signal.labels().to_vec(),
        values,
        sample_length: t,
    })
}

/// Zero mean, unit population variance; `None` for a constant row.
fn standardize(row: &[f64]) -> Option<Vec<f64>> {
    if row.iter().all(|&v| v == row[0]) {
        return None;
    }
    let t = row.len() as f64;
    let mean = row.iter().sum::<f64>() / t;
    let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t;
    if !(var > 0.0) {
        return None;
    }
    let sd = var.sqrt();
    Some(row.iter().map(|v| (v - mean) / sd).collect())
}
