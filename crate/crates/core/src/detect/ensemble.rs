use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{louvain, potts, spectral, Algorithm, AnnealingSchedule, DetectionResult};
use crate::error::{Error, Result};
use crate::modularity::{ModularityContext, Partition};

/// Runs within this fraction of `|max Q|` of the best count as maximal.
pub const MAX_Q_RELATIVE_TOLERANCE: f64 = 1e-10;

/// One distinct partition seen across restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occurrence {
    pub partition: Partition,
    pub count: usize,
    pub q: f64,
    pub max_q: bool,
}

/// Restarts of one algorithm, reduced in seed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub algorithm: Algorithm,
    pub runs: Vec<DetectionResult>,
    pub max_q: f64,
    /// Most frequent partition among those reaching `max_q`.
    pub frequent_partition: Partition,
    /// Every distinct partition, sorted by canonical labels.
    pub occurrences: Vec<Occurrence>,
}

impl EnsembleResult {
    fn from_runs(algorithm: Algorithm, runs: Vec<DetectionResult>) -> Self {
        let max_q = runs.iter().map(|r| r.q).fold(f64::NEG_INFINITY, f64::max);
        let tol = MAX_Q_RELATIVE_TOLERANCE * max_q.abs();
        let mut table: BTreeMap<&Partition, (usize, f64)> = BTreeMap::new();
        for r in &runs {
            table.entry(&r.partition).or_insert((0, r.q)).0 += 1;
        }
        let occurrences: Vec<Occurrence> = table
            .into_iter()
            .map(|(p, (count, q))| Occurrence {
                partition: p.clone(),
                count,
                q,
                max_q: max_q - q <= tol,
            })
            .collect();
        // sorted ascending, so the first of equal counts wins
        let frequent_partition = occurrences
            .iter()
            .filter(|o| o.max_q)
            .fold(None::<&Occurrence>, |best, o| match best {
                Some(b) if b.count >= o.count => Some(b),
                _ => Some(o),
            })
            .expect("at least one run reaches max Q")
            .partition
            .clone();
        Self {
            algorithm,
            runs,
            max_q,
            frequent_partition,
            occurrences,
        }
    }

    /// Distinct partitions reaching max Q, in canonical order.
    pub fn max_q_partitions(&self) -> Vec<&Partition> {
        self.occurrences
            .iter()
            .filter(|o| o.max_q)
            .map(|o| &o.partition)
            .collect()
    }

    pub fn occurrence_counts(&self) -> BTreeMap<Partition, usize> {
        self.occurrences
            .iter()
            .map(|o| (o.partition.clone(), o.count))
            .collect()
    }

    /// Count of `p` across all runs.
    pub fn count_of(&self, p: &Partition) -> usize {
        self.occurrences
            .iter()
            .find(|o| &o.partition == p)
            .map_or(0, |o| o.count)
    }
}

/// [`run_ensemble_with`] using the default annealing schedule.
pub fn run_ensemble(
    ctx: &ModularityContext,
    algorithm: Algorithm,
    restarts: usize,
    base_seed: u64,
) -> Result<EnsembleResult> {
    run_ensemble_with(
        ctx,
        algorithm,
        restarts,
        base_seed,
        &AnnealingSchedule::default(),
    )
}

/// Runs `algorithm` with seeds `base_seed .. base_seed + restarts`.
///
/// Restarts execute on the rayon pool; results are collected in seed order.
/// Spectral bisection is deterministic and runs once.
pub fn run_ensemble_with(
    ctx: &ModularityContext,
    algorithm: Algorithm,
    restarts: usize,
    base_seed: u64,
    schedule: &AnnealingSchedule,
) -> Result<EnsembleResult> {
    if restarts == 0 {
        return Err(Error::Usage("restarts must be at least 1".into()));
    }
    schedule.validate()?;
    let runs = match algorithm {
        Algorithm::Spectral => vec![spectral(ctx)?],
        Algorithm::Louvain => (0..restarts)
            .into_par_iter()
            .map(|k| louvain(ctx, base_seed.wrapping_add(k as u64)))
            .collect(),
        Algorithm::Potts => (0..restarts)
            .into_par_iter()
            .map(|k| potts(ctx, base_seed.wrapping_add(k as u64), schedule))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(EnsembleResult::from_runs(algorithm, runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::testing::{random_context, two_block_context};

    fn run(p: &[usize], q: f64, seed: u64) -> DetectionResult {
        DetectionResult {
            partition: Partition::new(p),
            q,
            algorithm: Algorithm::Louvain,
            seed,
            iterations: 1,
        }
    }

    #[test]
    fn single_restart() {
        let ctx = random_context(9, 1);
        let e = run_ensemble(&ctx, Algorithm::Louvain, 1, 5).unwrap();
        assert_eq!(e.runs.len(), 1);
        assert_eq!(e.frequent_partition, e.runs[0].partition);
        assert_eq!(e.runs[0].seed, 5);
        assert!(run_ensemble(&ctx, Algorithm::Louvain, 0, 5).is_err());
    }

    #[test]
    fn frequent_among_max_q() {
        let e = EnsembleResult::from_runs(
            Algorithm::Louvain,
            vec![
                run(&[0, 1, 1], 0.5, 0),
                run(&[0, 0, 1], 0.9, 1),
                run(&[0, 1, 1], 0.5, 2),
                run(&[0, 1, 0], 0.9, 3),
                run(&[0, 0, 1], 0.9, 4),
                run(&[0, 1, 1], 0.5, 5),
            ],
        );
        assert_eq!(e.max_q, 0.9);
        assert_eq!(e.frequent_partition, Partition::new(&[0, 0, 1]));
        assert_eq!(e.max_q_partitions().len(), 2);
        assert_eq!(e.count_of(&Partition::new(&[0, 1, 1])), 3);
        assert_eq!(e.occurrence_counts().values().sum::<usize>(), 6);
    }

    #[test]
    fn ties_go_to_lowest_labels() {
        let e = EnsembleResult::from_runs(
            Algorithm::Potts,
            vec![run(&[0, 1, 0], 0.9, 0), run(&[0, 0, 1], 0.9, 1)],
        );
        assert_eq!(e.frequent_partition, Partition::new(&[0, 0, 1]));
    }

    #[test]
    fn planted_dominates() {
        let (ctx, truth) = two_block_context(20, 0.4);
        let e = run_ensemble(&ctx, Algorithm::Louvain, 100, 0).unwrap();
        assert!(e.count_of(&truth) >= 95);
        assert_eq!(e.frequent_partition, truth);
    }

    #[test]
    fn spectral_runs_once() {
        let ctx = random_context(10, 2);
        let e = run_ensemble(&ctx, Algorithm::Spectral, 1000, 0).unwrap();
        assert_eq!(e.runs.len(), 1);
        assert_eq!(e.occurrences.len(), 1);
    }

    #[test]
    fn order_independent_of_threads() {
        let ctx = random_context(14, 3);
        let a = run_ensemble(&ctx, Algorithm::Potts, 8, 10).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| run_ensemble(&ctx, Algorithm::Potts, 8, 10).unwrap());
        assert_eq!(a, b);
        assert!(a
            .runs
            .iter()
            .enumerate()
            .all(|(k, r)| r.seed == 10 + k as u64));
    }
}
