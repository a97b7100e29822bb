use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use super::config::RunConfig;
use crate::compare::{MatchedPair, ViReport};
use crate::detect::{Algorithm, EnsembleResult};
use crate::ingest::SignalKind;
use crate::spectra::{
    ModeCounts, SpectralDecomposition, SpectrumHistogram, HISTOGRAM_NORMALIZATION,
};

/// Version stamped on every JSON/CSV layout written by the CLI.
pub const SCHEMA_VERSION: u32 = 1;

/// Conventions that affect reported numbers.
#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    pub c_norm: &'static str,
    pub bulk_boundary: &'static str,
    pub market_mode: &'static str,
    pub modularity_diagonal: &'static str,
    pub q_comparability: &'static str,
    pub vi: &'static str,
    pub log_base: &'static str,
    pub switching_matching: &'static str,
    pub max_q_tolerance: &'static str,
    pub histogram_normalization: &'static str,
    pub window_count: &'static str,
    pub variance_divisor: &'static str,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            c_norm: "sum of all entries of the raw correlation matrix",
            bulk_boundary: "eigenvalues <= lambda_plus (including those below lambda_minus) form the random part",
            market_mode: "only the largest eigenvalue, when above lambda_plus",
            modularity_diagonal: "diagonal terms included",
            q_comparability: "Q values are not comparable between weighted and binary representations",
            vi: "1 - I/H on the contingency table; 0 when both partitions are a single community",
            log_base: "natural (nats)",
            switching_matching: "optimal one-to-one maximum-overlap community matching",
            max_q_tolerance: "runs within 1e-10 * |max Q| of the best count as maximal",
            histogram_normalization: HISTOGRAM_NORMALIZATION,
            window_count: "(T - 1) - width + 1 start positions at stride 1",
            variance_divisor: "population (divide by T)",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub conventions: Conventions,
    /// Output file name to schema version.
    pub outputs: BTreeMap<String, u32>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config: config.clone(),
            conventions: Conventions::default(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, path: &Path) {
        let name = path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        self.outputs.insert(name, SCHEMA_VERSION);
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Writes rows of pre-formatted cells.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn out_path(dir: &Path, name: String) -> PathBuf {
    dir.join(name)
}

#[derive(Debug, Serialize)]
pub struct SpectrumSidecar {
    pub schema_version: u32,
    pub representation: SignalKind,
    pub n: usize,
    pub t_eff: usize,
    pub ratio: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub lambda_market: f64,
    pub above_bulk: usize,
    pub no_structure: bool,
    pub mode_counts: ModeCounts,
    pub fraction_outside_bulk: f64,
    pub mp_ks_distance: f64,
    pub histogram_normalization: &'static str,
}

impl SpectrumSidecar {
    pub fn new(
        kind: SignalKind,
        spec: &SpectralDecomposition,
        counts: ModeCounts,
        no_structure: bool,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            representation: kind,
            n: spec.n(),
            t_eff: spec.t_eff,
            ratio: spec.ratio,
            lambda_minus: spec.lambda_minus,
            lambda_plus: spec.lambda_plus,
            lambda_market: spec.lambda_market,
            above_bulk: spec.above_bulk(),
            no_structure,
            mode_counts: counts,
            fraction_outside_bulk: spec.fraction_outside_bulk(),
            mp_ks_distance: crate::spectra::mp_ks_distance(&spec.eigenvalues, spec.ratio),
            histogram_normalization: HISTOGRAM_NORMALIZATION,
        }
    }
}

pub fn write_histogram(path: &Path, h: &SpectrumHistogram) -> anyhow::Result<()> {
    let rows = h
        .bin_centers()
        .into_iter()
        .zip(&h.empirical_density)
        .zip(&h.mp_density)
        .map(|((c, e), m)| vec![num(c), num(*e), num(*m)]);
    write_csv(
        path,
        &["bin_center", "empirical_density", "mp_density"],
        rows,
    )
}

#[derive(Debug, Serialize)]
pub struct OccurrenceEntry {
    pub partition: Vec<usize>,
    pub count: usize,
    pub q: f64,
    pub max_q: bool,
}

#[derive(Debug, Serialize)]
pub struct RunEntry {
    pub seed: u64,
    pub q: f64,
    pub iterations: usize,
    pub communities: usize,
}

#[derive(Debug, Serialize)]
pub struct DetectionReport {
    pub schema_version: u32,
    pub algorithm: Algorithm,
    pub representation: SignalKind,
    pub restarts: usize,
    pub base_seed: u64,
    pub max_q: f64,
    pub c_norm: f64,
    pub mode_counts: ModeCounts,
    pub no_group_structure: bool,
    pub q_comparable_across_representations: bool,
    pub labels: Vec<String>,
    /// Community of each label, aligned with `labels`.
    pub frequent_partition: Vec<usize>,
    pub frequent_count: usize,
    pub occurrences: Vec<OccurrenceEntry>,
    pub runs: Vec<RunEntry>,
}

impl DetectionReport {
    pub fn new(
        kind: SignalKind,
        labels: &[String],
        ensemble: &EnsembleResult,
        base_seed: u64,
        c_norm: f64,
        counts: ModeCounts,
    ) -> Self {
        let mut occurrences: Vec<OccurrenceEntry> = ensemble
            .occurrences
            .iter()
            .map(|o| OccurrenceEntry {
                partition: o.partition.labels().to_vec(),
                count: o.count,
                q: o.q,
                max_q: o.max_q,
            })
            .collect();
        occurrences.sort_by(|a, b| {
            b.count
                .cmp(&a.count)
                .then_with(|| a.partition.cmp(&b.partition))
        });
        Self {
            schema_version: SCHEMA_VERSION,
            algorithm: ensemble.algorithm,
            representation: kind,
            restarts: ensemble.runs.len(),
            base_seed,
            max_q: ensemble.max_q,
            c_norm,
            mode_counts: counts,
            no_group_structure: counts.group == 0,
            q_comparable_across_representations: false,
            labels: labels.to_vec(),
            frequent_partition: ensemble.frequent_partition.labels().to_vec(),
            frequent_count: ensemble.count_of(&ensemble.frequent_partition),
            occurrences,
            runs: ensemble
                .runs
                .iter()
                .map(|r| RunEntry {
                    seed: r.seed,
                    q: r.q,
                    iterations: r.iterations,
                    communities: r.partition.community_count(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairComparison {
    pub report: ViReport,
    pub matching: Vec<MatchedPair>,
    pub weighted_partition: Vec<usize>,
    pub binary_partition: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub algorithm: Algorithm,
    pub labels: Vec<String>,
    pub q_weighted: f64,
    pub q_binary: f64,
    pub q_comparable: bool,
    pub frequent: PairComparison,
    pub minimal: PairComparison,
    pub conventions: Conventions,
}

/// One row shaped like the binary-vs-weighted summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub algorithm: Algorithm,
    pub q_weighted: f64,
    pub q_binary: f64,
    pub frequent_vi: f64,
    pub frequent_switching_pct: f64,
    pub minimal_vi: f64,
    pub minimal_switching_pct: f64,
}

pub const TABLE_HEADER: [&str; 7] = [
    "algorithm",
    "q_weighted",
    "q_binary",
    "frequent_vi",
    "frequent_switching_pct",
    "minimal_vi",
    "minimal_switching_pct",
];

impl TableRow {
    pub fn cells(&self) -> Vec<String> {
        vec![
            self.algorithm.to_string(),
            num(self.q_weighted),
            num(self.q_binary),
            num(self.frequent_vi),
            num(self.frequent_switching_pct),
            num(self.minimal_vi),
            num(self.minimal_switching_pct),
        ]
    }
}

#[derive(Debug, Serialize)]
pub struct StandaloneComparison {
    pub schema_version: u32,
    pub labels: Vec<String>,
    pub report: ViReport,
    pub matching: Vec<MatchedPair>,
    pub conventions: Conventions,
}
