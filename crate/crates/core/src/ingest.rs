//! Price panels, signal matrices and sector labels.
//!
//! A price panel is read from a CSV whose first column holds timestamps and
//! whose remaining columns hold one price series per stock. From it we derive
//! the weighted signal (log-returns) and the binary signal (the ternary sign
//! of each log-return).

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label reported for stocks missing from a [`SectorMap`].
pub const UNKNOWN_SECTOR: &str = "UNKNOWN";

/// N labeled price series sampled at T common timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    labels: Vec<String>,
    timestamps: Vec<String>,
    /// Row-major: `prices[i][t]` is the price of stock `i` at timestamp `t`.
    prices: Vec<Vec<f64>>,
    dropped_rows: usize,
}

impl PricePanel {
    /// Builds a panel, checking every invariant.
    pub fn new(
        labels: Vec<String>,
        timestamps: Vec<String>,
        prices: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_labels(&labels)?;
        if labels.len() < 2 {
            return Err(Error::Size(format!(
                "need at least 2 stocks, got {}",
                labels.len()
            )));
        }
        if timestamps.len() < 3 {
            return Err(Error::Size(format!(
                "need at least 3 timestamps, got {}",
                timestamps.len()
            )));
        }
        if prices.len() != labels.len() {
            return Err(Error::Validation(format!(
                "{} price rows for {} labels",
                prices.len(),
                labels.len()
            )));
        }
        for (label, row) in labels.iter().zip(&prices) {
            if row.len() != timestamps.len() {
                return Err(Error::Validation(format!(
                    "series '{label}' has {} prices for {} timestamps",
                    row.len(),
                    timestamps.len()
                )));
            }
            if let Some(t) = row.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(Error::Validation(format!(
                    "series '{label}' has non-positive price {} at '{}'",
                    row[t], timestamps[t]
                )));
            }
        }
        check_increasing(&timestamps)?;
        Ok(Self {
            labels,
            timestamps,
            prices,
            dropped_rows: 0,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn prices(&self) -> &[Vec<f64>] {
        &self.prices
    }

    pub fn n_series(&self) -> usize {
        self.labels.len()
    }

    pub fn n_timestamps(&self) -> usize {
        self.timestamps.len()
    }

    /// Number of input rows skipped because a cell was empty.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for label in labels {
        if label.is_empty() {
            return Err(Error::Validation("empty stock label".into()));
        }
        if !seen.insert(label.as_str()) {
            return Err(Error::Validation(format!(
                "duplicate stock label '{label}'"
            )));
        }
    }
    Ok(())
}

/// Timestamps that all parse as numbers are ordered numerically, anything
/// else lexicographically (which is correct for ISO-8601 dates).
fn check_increasing(timestamps: &[String]) -> Result<()> {
    let numeric: Option<Vec<f64>> = timestamps.iter().map(|s| s.trim().parse().ok()).collect();
    let bad = match numeric {
        Some(values) => values.windows(2).position(|w| !(w[0] < w[1])),
        None => timestamps.windows(2).position(|w| w[0] >= w[1]),
    };
    match bad {
        Some(i) => Err(Error::Validation(format!(
            "timestamps not strictly increasing: '{}' then '{}'",
            timestamps[i],
            timestamps[i + 1]
        ))),
        None => Ok(()),
    }
}

/// Reads a price panel from a CSV file (`date,LABEL1,...,LABELN`).
pub fn load_prices(path: impl AsRef<Path>) -> Result<PricePanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_prices(file)
}

/// Reads a price panel from any CSV source.
///
/// Rows with an empty cell are skipped and counted in
/// [`PricePanel::dropped_rows`]; a cell that is present but not a positive
/// number is an error.
pub fn read_prices<R: Read>(source: R) -> Result<PricePanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.len() < 3 {
        return Err(Error::Size(format!(
            "need a timestamp column and at least 2 stocks, got {} columns",
            header.len()
        )));
    }
    let labels: Vec<String> = header
        .iter()
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    check_labels(&labels)?;

    let mut timestamps = Vec::new();
    let mut prices = vec![Vec::new(); labels.len()];
    let mut dropped = 0;
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(csv_error)? {
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().any(|cell| cell.trim().is_empty()) {
            dropped += 1;
            continue;
        }
        let mut values = Vec::with_capacity(labels.len());
        for (col, cell) in record.iter().enumerate().skip(1) {
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row,
                column: col + 1,
                message: format!("'{cell}' is not a number"),
            })?;
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation(format!(
                    "non-positive price {value} at row {row}, column {}",
                    col + 1
                )));
            }
            values.push(value);
        }
        timestamps.push(record[0].trim().to_string());
        for (series, value) in prices.iter_mut().zip(values) {
            series.push(value);
        }
    }
    let mut panel = PricePanel::new(labels, timestamps, prices)?;
    panel.dropped_rows = dropped;
    Ok(panel)
}

fn csv_error(err: csv::Error) -> Error {
    let (row, column) = match err.kind() {
        csv::ErrorKind::UnequalLengths { pos, len, .. } => (
            pos.as_ref().map_or(0, |p| p.line() as usize),
            *len as usize + 1,
        ),
        _ => (err.position().map_or(0, |p| p.line() as usize), 0),
    };
    Error::Parse {
        row,
        column,
        message: err.to_string(),
    }
}

/// Which representation a [`SignalMatrix`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    /// Log-returns.
    Weighted,
    /// Ternary signs of log-returns.
    Binary,
}

impl SignalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::Weighted => "weighted",
            SignalKind::Binary => "binary",
        }
    }
}

impl std::fmt::Display for SignalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// N series of equal length, either log-returns or their signs.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    labels: Vec<String>,
    kind: SignalKind,
    rows: Vec<Vec<f64>>,
}

impl SignalMatrix {
    pub fn new(labels: Vec<String>, kind: SignalKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_labels(&labels)?;
        if rows.len() != labels.len() {
            return Err(Error::Validation(format!(
                "{} rows for {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Validation("rows have unequal lengths".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite signal value".into()));
        }
        if kind == SignalKind::Binary
            && rows
                .iter()
                .flatten()
                .any(|&v| v != 0.0 && v != 1.0 && v != -1.0)
        {
            return Err(Error::Validation(
                "binary signal outside {-1, 0, +1}".into(),
            ));
        }
        Ok(Self { labels, kind, rows })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_series(&self) -> usize {
        self.rows.len()
    }

    /// Number of time steps per series.
    pub fn len(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `r_i(t) = ln(P_i(t+1) / P_i(t))`.
pub fn log_returns(panel: &PricePanel) -> SignalMatrix {
    let rows = panel
        .prices
        .iter()
        .map(|p| p.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
        .collect();
    SignalMatrix {
        labels: panel.labels.clone(),
        kind: SignalKind::Weighted,
        rows,
    }
}

/// Maps each log-return to +1, 0 or -1 according to its sign.
pub fn binarize(weighted: &SignalMatrix) -> Result<SignalMatrix> {
    if weighted.kind != SignalKind::Weighted {
        return Err(Error::Usage("binarize expects a weighted signal".into()));
    }
    let rows = weighted
        .rows
        .iter()
        .map(|r| r.iter().map(|&v| sign(v)).collect())
        .collect();
    Ok(SignalMatrix {
        labels: weighted.labels.clone(),
        kind: SignalKind::Binary,
        rows,
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Permutes every row independently.
///
/// Row `i` is shuffled with a ChaCha stream keyed by `seed` and selected by
/// `i`, so each row gets its own permutation and the result depends only on
/// the seed.
pub fn shuffle_rows(signal: &SignalMatrix, seed: u64) -> SignalMatrix {
    let rows = signal
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut row = row.clone();
            row.shuffle(&mut rng);
            row
        })
        .collect();
    SignalMatrix {
        labels: signal.labels.clone(),
        kind: signal.kind,
        rows,
    }
}

/// Columns `start..start + width` of every row.
pub fn window(signal: &SignalMatrix, start: usize, width: usize) -> Result<SignalMatrix> {
    if width < 2 {
        return Err(Error::Bounds(format!("window width {width} < 2")));
    }
    let end = start
        .checked_add(width)
        .filter(|&end| end <= signal.len())
        .ok_or_else(|| {
            Error::Bounds(format!(
                "window [{start}, {start}+{width}) exceeds series length {}",
                signal.len()
            ))
        })?;
    Ok(SignalMatrix {
        labels: signal.labels.clone(),
        kind: signal.kind,
        rows: signal.rows.iter().map(|r| r[start..end].to_vec()).collect(),
    })
}

/// Number of valid window start positions, `len - width + 1` (0 if none).
pub fn window_count(len: usize, width: usize) -> usize {
    if width < 2 || width > len {
        0
    } else {
        len - width + 1
    }
}

/// Stock label to sector name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorMap {
    sectors: BTreeMap<String, String>,
}

impl SectorMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a mapping; a label may be mapped once only.
    pub fn insert(&mut self, label: impl Into<String>, sector: impl Into<String>) -> Result<()> {
        let label = label.into();
        if self.sectors.contains_key(&label) {
            return Err(Error::Validation(format!(
                "duplicate sector label '{label}'"
            )));
        }
        self.sectors.insert(label, sector.into());
        Ok(())
    }

    /// Sector of `label`, or [`UNKNOWN_SECTOR`].
    pub fn sector_of(&self, label: &str) -> &str {
        self.sectors
            .get(label)
            .map_or(UNKNOWN_SECTOR, String::as_str)
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }
}

/// Reads a `label,sector` CSV. An empty file yields an empty map.
pub fn load_sectors(path: impl AsRef<Path>) -> Result<SectorMap> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_sectors(file)
}

pub fn read_sectors<R: Read>(source: R) -> Result<SectorMap> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let mut map = SectorMap::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(csv_error)? {
        if record.len() != 2 {
            return Err(Error::Parse {
                row: record.position().map_or(0, |p| p.line() as usize),
                column: record.len(),
                message: "expected 2 columns (label,sector)".into(),
            });
        }
        map.insert(record[0].trim(), record[1].trim())?;
    }
    Ok(map)
}
