//! Planted-community factor model used as ground truth.
//!
//! Series `i` in block `k` is
//! `x_i(t) = m·g(t) + b_k·f_k(t) + √(1 − m² − b_k²)·ε_i(t)`
//! with independent standard Gaussian `g`, `f_k`, `ε_i`. Expected
//! correlations are `m² + b_k²` within block `k` and `m²` across blocks.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{SignalKind, SignalMatrix};
use crate::modularity::Partition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub block_sizes: Vec<usize>,
    /// One loading per block.
    pub intra_loading: Vec<f64>,
    pub market_loading: f64,
    pub t_steps: usize,
    pub seed: u64,
}

impl PlantedSpec {
    /// Equal intra-block loading for every block.
    pub fn uniform(
        block_sizes: Vec<usize>,
        intra: f64,
        market: f64,
        t_steps: usize,
        seed: u64,
    ) -> Self {
        let intra_loading = vec![intra; block_sizes.len()];
        Self {
            block_sizes,
            intra_loading,
            market_loading: market,
            t_steps,
            seed,
        }
    }

    pub fn n(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(Error::Config(format!("need at least 2 series, got {n}")));
        }
        if self.block_sizes.contains(&0) {
            return Err(Error::Config("empty block".into()));
        }
        if self.intra_loading.len() != self.block_sizes.len() {
            return Err(Error::Config(format!(
                "{} loadings for {} blocks",
                self.intra_loading.len(),
                self.block_sizes.len()
            )));
        }
        if self.t_steps < 2 * n {
            return Err(Error::Config(format!(
                "t_steps {} < 2N = {}",
                self.t_steps,
                2 * n
            )));
        }
        let m = self.market_loading;
        if !(0.0..1.0).contains(&m) {
            return Err(Error::Config(format!("market loading {m} outside [0, 1)")));
        }
        for &b in &self.intra_loading {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("intra loading {b} outside [0, 1)")));
            }
            if 1.0 - m * m - b * b <= 0.0 {
                return Err(Error::Config(format!(
                    "loadings m = {m}, b = {b} leave no idiosyncratic variance"
                )));
            }
        }
        Ok(())
    }

    /// Block index of every series.
    pub fn truth(&self) -> Partition {
        let labels: Vec<usize> = self
            .block_sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &size)| std::iter::repeat_n(k, size))
            .collect();
        Partition::new(&labels)
    }
}

/// Draws the series (standardized per row) and the planted partition.
pub fn generate(spec: &PlantedSpec) -> Result<(SignalMatrix, Partition)> {
    spec.validate()?;
    let t = spec.t_steps;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw =
        |len: usize| -> Vec<f64> { (0..len).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let market = draw(t);
    let factors: Vec<Vec<f64>> = spec.block_sizes.iter().map(|_| draw(t)).collect();
    let m = spec.market_loading;

    let mut rows = Vec::with_capacity(spec.n());
    for (k, &size) in spec.block_sizes.iter().enumerate() {
        let b = spec.intra_loading[k];
        let idio = (1.0 - m * m - b * b).sqrt();
        for _ in 0..size {
            let eps = draw(t);
            let row: Vec<f64> = (0..t)
                .map(|s| m * market[s] + b * factors[k][s] + idio * eps[s])
                .collect();
            rows.push(standardize(row));
        }
    }
    let labels = (0..spec.n()).map(|i| format!("S{i:03}")).collect();
    let signal = SignalMatrix::new(labels, SignalKind::Weighted, rows)?;
    Ok((signal, spec.truth()))
}

fn standardize(mut row: Vec<f64>) -> Vec<f64> {
    let t = row.len() as f64;
    let mean = row.iter().sum::<f64>() / t;
    let sd = (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t).sqrt();
    row.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    row
}

/// Writes a price CSV (`date,LABEL...`) whose log-returns are `signal` scaled
/// by `volatility`; prices start at 100 and timestamps are step indices.
pub fn write_price_csv<W: Write>(signal: &SignalMatrix, volatility: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Validation(format!("csv write failed: {e}"));
    let mut header = vec!["date".to_string()];
    header.extend(signal.labels().iter().cloned());
    w.write_record(&header).map_err(err)?;
    let mut log_price = vec![100f64.ln(); signal.n_series()];
    for t in 0..=signal.len() {
        if t > 0 {
            for (lp, row) in log_price.iter_mut().zip(signal.rows()) {
                *lp += volatility * row[t - 1];
            }
        }
        let mut record = vec![t.to_string()];
        record.extend(log_price.iter().map(|lp| format!("{:?}", lp.exp())));
        w.write_record(&record).map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Validation(format!("csv write failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::pearson;
    use crate::ingest::{binarize, log_returns, read_prices};
    use crate::spectra::{decompose_modes, eigendecompose};

    #[test]
    fn rejects_bad_specs() {
        let ok = PlantedSpec::uniform(vec![5, 5], 0.4, 0.5, 100, 0);
        assert!(ok.validate().is_ok());
        for bad in [
            PlantedSpec::uniform(vec![1], 0.4, 0.5, 100, 0),
            PlantedSpec::uniform(vec![5, 5], 0.4, 0.5, 19, 0),
            PlantedSpec::uniform(vec![5, 5], 0.8, 0.7, 100, 0),
            PlantedSpec::uniform(vec![5, 0], 0.4, 0.5, 100, 0),
            PlantedSpec {
                intra_loading: vec![0.3],
                ..ok.clone()
            },
        ] {
            assert!(matches!(generate(&bad), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn deterministic() {
        let spec = PlantedSpec::uniform(vec![4, 3], 0.4, 0.3, 50, 9);
        let (a, ta) = generate(&spec).unwrap();
        let (b, tb) = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert_eq!(ta.labels(), [0, 0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn planted_correlations() {
        let spec = PlantedSpec::uniform(vec![30, 30], 0.45, 0.5, 6000, 1);
        let (signal, truth) = generate(&spec).unwrap();
        let c = pearson(&signal).unwrap();
        let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
        for i in 0..60 {
            for j in 0..i {
                if truth.labels()[i] == truth.labels()[j] {
                    intra += c.get(i, j);
                    ni += 1;
                } else {
                    inter += c.get(i, j);
                    nx += 1;
                }
            }
        }
        assert!(
            (intra / ni as f64 - 0.4525).abs() < 0.03,
            "{}",
            intra / ni as f64
        );
        assert!(
            (inter / nx as f64 - 0.25).abs() < 0.03,
            "{}",
            inter / nx as f64
        );
    }

    #[test]
    fn noise_spec_has_no_structure() {
        let hits = (0..20)
            .filter(|&seed| {
                let (s, _) =
                    generate(&PlantedSpec::uniform(vec![40], 0.0, 0.0, 400, seed)).unwrap();
                let spec = eigendecompose(&pearson(&s).unwrap(), 400).unwrap();
                decompose_modes(&spec).no_structure
            })
            .count();
        assert!(hits >= 18, "{hits}/20");
    }

    #[test]
    fn unloaded_blocks_have_no_group_mode() {
        let (s, _) = generate(&PlantedSpec::uniform(vec![20, 20], 0.0, 0.5, 2000, 3)).unwrap();
        let modes = decompose_modes(&eigendecompose(&pearson(&s).unwrap(), 2000).unwrap());
        assert!(modes.group_is_empty());
    }

    #[test]
    fn binary_keeps_block_ordering() {
        let (s, truth) = generate(&PlantedSpec::uniform(vec![10, 10], 0.45, 0.5, 4000, 2)).unwrap();
        let c = pearson(&binarize(&s).unwrap()).unwrap();
        let mean = |same: bool| {
            let pairs: Vec<f64> = (0..20)
                .flat_map(|i| (0..i).map(move |j| (i, j)))
                .filter(|&(i, j)| (truth.labels()[i] == truth.labels()[j]) == same)
                .map(|(i, j)| c.get(i, j))
                .collect();
            pairs.iter().sum::<f64>() / pairs.len() as f64
        };
        assert!(mean(true) > mean(false) + 0.05);
    }

    #[test]
    fn price_csv_round_trip() {
        let (s, _) = generate(&PlantedSpec::uniform(vec![2, 2], 0.4, 0.3, 10, 4)).unwrap();
        let mut buf = Vec::new();
        write_price_csv(&s, 0.01, &mut buf).unwrap();
        let panel = read_prices(buf.as_slice()).unwrap();
        assert_eq!(panel.n_timestamps(), 11);
        let r = log_returns(&panel);
        for (a, b) in r.rows().iter().flatten().zip(s.rows().iter().flatten()) {
            assert!((a - 0.01 * b).abs() < 1e-9);
        }
    }
}
