use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;

use super::config::{Representation, RunConfig};
use super::output::*;
use super::{CompareArgs, ConvertArgs, CorrArgs, SynthArgs};
use crate::compare::{community_matching, minimal_vi_pair, variation_of_information};
use crate::correlation::pearson;
use crate::detect::{community_graph, run_ensemble_with, Algorithm, EnsembleResult};
use crate::ingest::{
    binarize, load_prices, load_sectors, log_returns, shuffle_rows, window, PricePanel, SectorMap,
    SignalKind, SignalMatrix,
};
use crate::modularity::Partition;
use crate::pipeline::Analysis;
use crate::spectra::{decompose_modes, eigendecompose, spectrum_histogram};
use crate::synth::{generate, write_price_csv, PlantedSpec};

fn stage<T>(name: &str, result: crate::Result<T>) -> anyhow::Result<T> {
    result
        .map_err(|e| anyhow!(e))
        .with_context(|| format!("stage '{name}' failed"))
}

fn load_panel(path: &Path) -> anyhow::Result<PricePanel> {
    let panel = stage("ingest", load_prices(path))
        .with_context(|| format!("loading {}", path.display()))?;
    log::info!(
        "loaded {} series x {} prices",
        panel.n_series(),
        panel.n_timestamps()
    );
    if panel.dropped_rows() > 0 {
        log::warn!(
            "skipped {} rows with missing cells in {}",
            panel.dropped_rows(),
            path.display()
        );
    }
    Ok(panel)
}

fn signal_of(weighted: &SignalMatrix, kind: SignalKind) -> anyhow::Result<SignalMatrix> {
    match kind {
        SignalKind::Weighted => Ok(weighted.clone()),
        SignalKind::Binary => stage("binarize", binarize(weighted)),
    }
}

fn analyze_staged(signal: &SignalMatrix) -> anyhow::Result<Analysis> {
    let correlation = stage("correlation", pearson(signal))?;
    let spectrum = stage(
        "spectra",
        eigendecompose(&correlation, correlation.sample_length()),
    )?;
    let modes = decompose_modes(&spectrum);
    let context = stage(
        "modularity",
        crate::modularity::make_context(&modes, &correlation),
    )?;
    Ok(Analysis {
        correlation,
        spectrum,
        modes,
        context,
    })
}

fn ensemble(
    cfg: &RunConfig,
    analysis: &Analysis,
    algorithm: Algorithm,
) -> anyhow::Result<EnsembleResult> {
    stage(
        "detect",
        run_ensemble_with(
            &analysis.context,
            algorithm,
            cfg.restarts_for(algorithm),
            cfg.seed,
            &cfg.schedule,
        ),
    )
    .with_context(|| format!("running {algorithm}"))
}

pub fn cmd_synth(args: &SynthArgs) -> anyhow::Result<()> {
    let intra = match args.intra.as_slice() {
        [one] => vec![*one; args.blocks.len()],
        many => many.to_vec(),
    };
    let spec = PlantedSpec {
        block_sizes: args.blocks.clone(),
        intra_loading: intra,
        market_loading: args.market,
        t_steps: args.steps,
        seed: args.seed,
    };
    let (signal, truth) = stage("synth", generate(&spec))?;
    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    stage(
        "synth",
        write_price_csv(&signal, args.volatility, std::io::BufWriter::new(file)),
    )?;
    if let Some(path) = &args.truth {
        write_partition_csv(path, signal.labels(), &truth)?;
    }
    Ok(())
}

pub fn cmd_convert(args: &ConvertArgs, binary: bool) -> anyhow::Result<()> {
    let panel = load_panel(&args.prices)?;
    let weighted = log_returns(&panel);
    let signal = if binary {
        signal_of(&weighted, SignalKind::Binary)?
    } else {
        weighted
    };
    let mut header = vec!["date"];
    header.extend(signal.labels().iter().map(String::as_str));
    let rows = (0..signal.len()).map(|t| {
        let mut row = vec![panel.timestamps()[t + 1].clone()];
        row.extend(signal.rows().iter().map(|r| {
            if binary {
                format!("{}", r[t] as i8)
            } else {
                num(r[t])
            }
        }));
        row
    });
    write_csv(&args.out, &header, rows)
}

pub fn cmd_corr(args: &CorrArgs) -> anyhow::Result<()> {
    let kind = match args.representation {
        Representation::Weighted => SignalKind::Weighted,
        Representation::Binary => SignalKind::Binary,
        Representation::Both => bail!("corr takes a single representation"),
    };
    let panel = load_panel(&args.prices)?;
    let signal = signal_of(&log_returns(&panel), kind)?;
    let c = stage("correlation", pearson(&signal))?;
    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    stage("correlation", c.write_csv(std::io::BufWriter::new(file)))
}

fn write_spectrum(
    dir: &Path,
    stem: &str,
    kind: SignalKind,
    signal: &SignalMatrix,
    bins: usize,
    manifest: &mut Manifest,
) -> anyhow::Result<SpectrumSidecar> {
    let c = stage("correlation", pearson(signal))?;
    let spec = stage("spectra", eigendecompose(&c, c.sample_length()))?;
    let modes = decompose_modes(&spec);
    let hist = stage("spectra", spectrum_histogram(&spec, bins))?;
    let csv_path = out_path(dir, format!("{stem}.csv"));
    write_histogram(&csv_path, &hist)?;
    manifest.record(&csv_path);
    let sidecar = SpectrumSidecar::new(kind, &spec, modes.counts, modes.no_structure);
    let json_path = out_path(dir, format!("{stem}.json"));
    write_json(&json_path, &sidecar)?;
    manifest.record(&json_path);
    Ok(sidecar)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> anyhow::Result<()> {
    create_dir(&cfg.out_dir)?;
    let weighted = log_returns(&load_panel(&cfg.prices)?);
    let mut manifest = Manifest::new("spectrum", cfg);
    for kind in cfg.representation.kinds() {
        let signal = signal_of(&weighted, kind)?;
        write_spectrum(
            &cfg.out_dir,
            &format!("spectrum_{kind}"),
            kind,
            &signal,
            cfg.bins,
            &mut manifest,
        )?;
    }
    manifest.write(&cfg.out_dir)
}

pub fn cmd_shuffle(cfg: &RunConfig) -> anyhow::Result<()> {
    create_dir(&cfg.out_dir)?;
    let weighted = log_returns(&load_panel(&cfg.prices)?);
    let mut manifest = Manifest::new("shuffle", cfg);
    for kind in cfg.representation.kinds() {
        let signal = signal_of(&weighted, kind)?;
        let shuffled = shuffle_rows(&signal, cfg.seed);
        let dir = &cfg.out_dir;
        write_spectrum(
            dir,
            &format!("spectrum_{kind}_original"),
            kind,
            &signal,
            cfg.bins,
            &mut manifest,
        )?;
        let after = write_spectrum(
            dir,
            &format!("spectrum_{kind}_shuffled"),
            kind,
            &shuffled,
            cfg.bins,
            &mut manifest,
        )?;
        if !after.no_structure {
            log::warn!(
                "{kind}: {} eigenvalue(s) above lambda_plus after shuffling",
                after.above_bulk
            );
        }
    }
    manifest.write(&cfg.out_dir)
}

/// Everything `detect` produced, for callers that want the numbers.
#[derive(Debug)]
pub struct DetectOutcome {
    pub labels: Vec<String>,
    pub ensembles: Vec<(Algorithm, SignalKind, EnsembleResult)>,
    pub table: Vec<TableRow>,
}

pub fn cmd_detect(cfg: &RunConfig) -> anyhow::Result<DetectOutcome> {
    create_dir(&cfg.out_dir)?;
    let dir = &cfg.out_dir;
    let weighted = log_returns(&load_panel(&cfg.prices)?);
    let labels = weighted.labels().to_vec();
    let sectors = match &cfg.sectors {
        Some(path) => stage("ingest", load_sectors(path))
            .with_context(|| format!("loading {}", path.display()))?,
        None => SectorMap::new(),
    };
    let kinds = cfg.representation.kinds();
    let analyses = kinds
        .iter()
        .map(|&kind| {
            let signal = signal_of(&weighted, kind)?;
            analyze_staged(&signal).with_context(|| format!("{kind} representation"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let mut manifest = Manifest::new("detect", cfg);
    let mut outcome = DetectOutcome {
        labels: labels.clone(),
        ensembles: Vec::new(),
        table: Vec::new(),
    };
    for &algorithm in &cfg.algorithms {
        let mut by_kind = HashMap::new();
        for (&kind, analysis) in kinds.iter().zip(&analyses) {
            log::info!(
                "{algorithm} on {kind}: {} restart(s)",
                cfg.restarts_for(algorithm)
            );
            let result = ensemble(cfg, analysis, algorithm)
                .with_context(|| format!("{kind} representation"))?;
            log::info!("{algorithm} on {kind}: max Q {:.6}", result.max_q);
            let stem = format!("{algorithm}_{kind}");
            let report = DetectionReport::new(
                kind,
                &labels,
                &result,
                cfg.seed,
                analysis.context.c_norm(),
                analysis.modes.counts,
            );
            let path = out_path(dir, format!("detect_{stem}.json"));
            write_json(&path, &report)?;
            manifest.record(&path);

            let path = out_path(dir, format!("partition_{stem}.csv"));
            write_partition_csv(&path, &labels, &result.frequent_partition)?;
            manifest.record(&path);

            let graph = stage(
                "report",
                community_graph(
                    &analysis.context,
                    &result.frequent_partition,
                    &labels,
                    &sectors,
                ),
            )?;
            let path = out_path(dir, format!("graph_{stem}.json"));
            write_json(&path, &graph)?;
            manifest.record(&path);
            let path = out_path(dir, format!("graph_{stem}_edges.csv"));
            let file = std::fs::File::create(&path)
                .with_context(|| format!("writing {}", path.display()))?;
            stage(
                "report",
                graph.write_edge_csv(std::io::BufWriter::new(file)),
            )?;
            manifest.record(&path);

            by_kind.insert(kind, result);
        }

        if cfg.representation == Representation::Both {
            let w = &by_kind[&SignalKind::Weighted];
            let b = &by_kind[&SignalKind::Binary];
            let report = compare_ensembles(algorithm, &labels, w, b)?;
            let path = out_path(dir, format!("compare_{algorithm}.json"));
            write_json(&path, &report)?;
            manifest.record(&path);
            outcome.table.push(TableRow {
                algorithm,
                q_weighted: w.max_q,
                q_binary: b.max_q,
                frequent_vi: report.frequent.report.vi,
                frequent_switching_pct: 100.0 * report.frequent.report.switching_fraction,
                minimal_vi: report.minimal.report.vi,
                minimal_switching_pct: 100.0 * report.minimal.report.switching_fraction,
            });
        }
        for kind in &kinds {
            let result = by_kind.remove(kind).expect("ran every representation");
            outcome.ensembles.push((algorithm, *kind, result));
        }
    }

    if !outcome.table.is_empty() {
        let path = out_path(dir, "table.csv".to_string());
        write_csv(
            &path,
            &TABLE_HEADER,
            outcome.table.iter().map(TableRow::cells),
        )?;
        manifest.record(&path);
    }
    manifest.write(dir)?;
    Ok(outcome)
}

fn compare_ensembles(
    algorithm: Algorithm,
    labels: &[String],
    weighted: &EnsembleResult,
    binary: &EnsembleResult,
) -> anyhow::Result<ComparisonReport> {
    let pair = |a: &Partition, b: &Partition| -> anyhow::Result<PairComparison> {
        Ok(PairComparison {
            report: stage("compare", variation_of_information(a, b))?,
            matching: stage("compare", community_matching(a, b))?,
            weighted_partition: a.labels().to_vec(),
            binary_partition: b.labels().to_vec(),
        })
    };
    let frequent = pair(&weighted.frequent_partition, &binary.frequent_partition)?;
    let minimal = stage("compare", minimal_vi_pair(weighted, binary))?;
    Ok(ComparisonReport {
        schema_version: SCHEMA_VERSION,
        algorithm,
        labels: labels.to_vec(),
        q_weighted: weighted.max_q,
        q_binary: binary.max_q,
        q_comparable: false,
        frequent,
        minimal: pair(&minimal.first, &minimal.second)?,
        conventions: Conventions::default(),
    })
}

/// Per-algorithm `(window_start, vi_frequent)` series.
pub type SlidingSeries = Vec<(Algorithm, Vec<(usize, f64)>)>;

pub fn cmd_sliding(cfg: &RunConfig) -> anyhow::Result<SlidingSeries> {
    create_dir(&cfg.out_dir)?;
    let weighted = log_returns(&load_panel(&cfg.prices)?);
    let len = weighted.len();
    if cfg.width > len {
        return Err(anyhow!(crate::Error::Bounds(format!(
            "window width {} exceeds series length {len}",
            cfg.width
        ))))
        .context("stage 'ingest' failed");
    }
    let starts: Vec<usize> = (0..=len - cfg.width).step_by(cfg.stride).collect();
    log::info!("{} windows of width {}", starts.len(), cfg.width);
    let per_window = starts
        .par_iter()
        .map(|&start| -> anyhow::Result<Vec<f64>> {
            let w = stage("ingest", window(&weighted, start, cfg.width))?;
            let b = signal_of(&w, SignalKind::Binary)?;
            let (aw, ab) = (analyze_staged(&w)?, analyze_staged(&b)?);
            cfg.algorithms
                .iter()
                .map(|&alg| {
                    let ew = ensemble(cfg, &aw, alg)?;
                    let eb = ensemble(cfg, &ab, alg)?;
                    Ok(stage(
                        "compare",
                        variation_of_information(&ew.frequent_partition, &eb.frequent_partition),
                    )?
                    .vi)
                })
                .collect()
        })
        .collect::<Vec<_>>();

    let mut manifest = Manifest::new("sliding", cfg);
    let mut series: SlidingSeries = cfg.algorithms.iter().map(|&a| (a, Vec::new())).collect();
    for (&start, result) in starts.iter().zip(per_window) {
        let vis = result.with_context(|| format!("window starting at {start}"))?;
        for ((_, s), vi) in series.iter_mut().zip(vis) {
            s.push((start, vi));
        }
    }
    for (alg, s) in &series {
        let path = out_path(&cfg.out_dir, format!("sliding_{alg}.csv"));
        write_csv(
            &path,
            &["window_start", "vi_frequent"],
            s.iter()
                .map(|(start, vi)| vec![start.to_string(), num(*vi)]),
        )?;
        manifest.record(&path);
    }
    manifest.write(&cfg.out_dir)?;
    Ok(series)
}

pub fn write_partition_csv(path: &Path, labels: &[String], p: &Partition) -> anyhow::Result<()> {
    write_csv(
        path,
        &["label", "community"],
        labels
            .iter()
            .zip(p.labels())
            .map(|(l, c)| vec![l.clone(), c.to_string()]),
    )
}

/// Reads a `label,community` CSV.
pub fn read_partition_csv(path: &Path) -> anyhow::Result<(Vec<String>, Partition)> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), k + 2))?;
        if record.len() != 2 {
            bail!("{}: row {} must have 2 columns", path.display(), k + 2);
        }
        labels.push(record[0].trim().to_string());
        ids.push(record[1].trim().parse::<i64>().with_context(|| {
            format!(
                "{}: row {} community is not an integer",
                path.display(),
                k + 2
            )
        })?);
    }
    Ok((labels, Partition::new(&ids)))
}

pub fn cmd_compare(args: &CompareArgs) -> anyhow::Result<()> {
    let (labels, first) = read_partition_csv(&args.first)?;
    let (other_labels, second) = read_partition_csv(&args.second)?;
    let position: HashMap<&str, usize> = other_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    if position.len() != other_labels.len() || labels.len() != other_labels.len() {
        bail!("partition files must list the same unique labels");
    }
    let aligned = labels
        .iter()
        .map(|l| {
            position
                .get(l.as_str())
                .map(|&i| second.labels()[i])
                .ok_or_else(|| anyhow!("label '{l}' missing from {}", args.second.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let second = Partition::new(&aligned);
    let report = StandaloneComparison {
        schema_version: SCHEMA_VERSION,
        labels,
        report: stage("compare", variation_of_information(&first, &second))?,
        matching: stage("compare", community_matching(&first, &second))?,
        conventions: Conventions::default(),
    };
    match &args.out {
        Some(path) => write_json(path, &report),
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}
