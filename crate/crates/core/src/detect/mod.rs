//! Modularity maximization on the group component of a correlation matrix.
//!
//! Three optimizers share the objective in [`crate::modularity`]:
//! a multilevel Louvain search, simulated annealing of a Potts spin model,
//! and recursive spectral bisection. [`run_ensemble`] repeats a seeded
//! optimizer and keeps the partitions that reach the best modularity.

mod ensemble;
mod graph;
mod louvain;
mod potts;
mod spectral;

use serde::{Deserialize, Serialize};

use crate::modularity::Partition;

pub use ensemble::{
    run_ensemble, run_ensemble_with, EnsembleResult, Occurrence, MAX_Q_RELATIVE_TOLERANCE,
};
pub use graph::{community_graph, CommunityEdge, CommunityGraphReport, CommunityNode};
pub use louvain::louvain;
pub use potts::{potts, AnnealingSchedule};
pub use spectral::spectral;

/// Smallest modularity gain treated as an improvement.
pub const GAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Louvain,
    Potts,
    Spectral,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Louvain, Algorithm::Potts, Algorithm::Spectral];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Louvain => "louvain",
            Algorithm::Potts => "potts",
            Algorithm::Spectral => "spectral",
        }
    }

    /// Whether repeated runs with different seeds can differ.
    pub fn is_seeded(self) -> bool {
        !matches!(self, Algorithm::Spectral)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "louvain" => Ok(Algorithm::Louvain),
            "potts" => Ok(Algorithm::Potts),
            "spectral" => Ok(Algorithm::Spectral),
            other => Err(crate::error::Error::Usage(format!(
                "unknown algorithm '{other}'"
            ))),
        }
    }
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub partition: Partition,
    /// Modularity of `partition`, recomputed from scratch.
    pub q: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Sweeps (Louvain), temperature levels (Potts) or accepted splits and
    /// merges (spectral).
    pub iterations: usize,
}

impl DetectionResult {
    fn trivial(n: usize, algorithm: Algorithm, seed: u64) -> Self {
        Self {
            partition: Partition::single(n),
            q: 0.0,
            algorithm,
            seed,
            iterations: 0,
        }
    }
}

/// Greedy single-node moves on a dense symmetric weight matrix until no move
/// gains more than `min_gain` (in units of the raw weights).
///
/// `comm` holds community ids below `w.nrows()`. A node may also leave for
/// an empty community. Returns whether anything moved and the sweep count.
pub(crate) fn local_moves<R: rand::Rng>(
    w: &nalgebra::DMatrix<f64>,
    comm: &mut [usize],
    min_gain: f64,
    max_sweeps: usize,
    rng: &mut R,
) -> (bool, usize) {
    use rand::seq::SliceRandom;

    let n = w.nrows();
    let mut sizes = vec![0usize; n];
    for &c in comm.iter() {
        sizes[c] += 1;
    }
    let mut links = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut moved_any = false;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        order.shuffle(rng);
        let mut moved = false;
        for &u in &order {
            links.iter_mut().for_each(|l| *l = 0.0);
            let row = w.column(u);
            for v in 0..n {
                if v != u {
                    links[comm[v]] += row[v];
                }
            }
            let current = comm[u];
            let mut best = current;
            let mut best_gain = min_gain;
            let mut empty = None;
            for c in 0..n {
                if sizes[c] == 0 {
                    empty.get_or_insert(c);
                    continue;
                }
                if c != current {
                    let gain = links[c] - links[current];
                    if gain > best_gain {
                        best_gain = gain;
                        best = c;
                    }
                }
            }
            if sizes[current] > 1 {
                if let Some(e) = empty {
                    if -links[current] > best_gain {
                        best = e;
                    }
                }
            }
            if best != current {
                sizes[current] -= 1;
                sizes[best] += 1;
                comm[u] = best;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    (moved_any, sweeps)
}
