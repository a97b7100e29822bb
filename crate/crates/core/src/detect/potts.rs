use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{local_moves, Algorithm, DetectionResult, GAIN_TOLERANCE};
use crate::error::{Error, Result};
use crate::modularity::{q_value, ModularityContext, Partition};

/// Geometric cooling schedule for [`potts`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    /// Starting temperature; `None` uses `N · mean |C_group|`.
    pub initial_temperature: Option<f64>,
    /// Multiplier applied after each level, in (0, 1).
    pub cooling_ratio: f64,
    /// Proposals per level, as a multiple of N.
    pub moves_per_node: usize,
    /// Stop once the fraction of accepted proposals in a level drops below this.
    pub min_acceptance: f64,
    /// Stop once the temperature drops below this.
    pub floor_temperature: f64,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        Self {
            initial_temperature: None,
            cooling_ratio: 0.995,
            moves_per_node: 10,
            min_acceptance: 0.01,
            floor_temperature: 1e-6,
        }
    }
}

impl AnnealingSchedule {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!(
                    "initial temperature must be positive, got {t}"
                )));
            }
        }
        if !(self.cooling_ratio > 0.0 && self.cooling_ratio < 1.0) {
            return Err(Error::Config(format!(
                "cooling ratio must lie in (0, 1), got {}",
                self.cooling_ratio
            )));
        }
        if !(self.floor_temperature > 0.0) {
            return Err(Error::Config(format!(
                "floor temperature must be positive, got {}",
                self.floor_temperature
            )));
        }
        if self.moves_per_node == 0 {
            return Err(Error::Config("moves per node must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_acceptance) {
            return Err(Error::Config(format!(
                "min acceptance must lie in [0, 1], got {}",
                self.min_acceptance
            )));
        }
        Ok(())
    }

    fn start_temperature(&self, ctx: &ModularityContext) -> f64 {
        self.initial_temperature.unwrap_or_else(|| {
            let n = ctx.n() as f64;
            ctx.c_group().iter().map(|v| v.abs()).sum::<f64>() / n
        })
    }
}

/// Simulated annealing of `H(σ) = −Σ_ij C_group[i][j] δ(σ_i, σ_j)` with up to
/// N spin states, Metropolis single-spin updates and geometric cooling.
///
/// The best configuration seen is finished with a zero-temperature greedy
/// pass and returned canonicalized. An all-zero group matrix gives a single
/// community.
pub fn potts(
    ctx: &ModularityContext,
    seed: u64,
    schedule: &AnnealingSchedule,
) -> Result<DetectionResult> {
    potts_traced(ctx, seed, schedule).map(|(r, _)| r)
}

/// [`potts`] plus the best-seen Q after every temperature level.
pub(crate) fn potts_traced(
    ctx: &ModularityContext,
    seed: u64,
    schedule: &AnnealingSchedule,
) -> Result<(DetectionResult, Vec<f64>)> {
    schedule.validate()?;
    let n = ctx.n();
    if ctx.is_trivial() {
        return Ok((
            DetectionResult::trivial(n, Algorithm::Potts, seed),
            Vec::new(),
        ));
    }
    let c = ctx.c_group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spins: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut sizes = vec![0usize; n];
    for &s in &spins {
        sizes[s] += 1;
    }
    // field[u * n + s] = Σ_{v ≠ u, σ_v = s} C[u][v]
    let mut field = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            if v != u {
                field[u * n + spins[v]] += c[(u, v)];
            }
        }
    }
    let mut energy = -crate::modularity::q_raw(ctx, &spins) * ctx.c_norm();
    let mut best_energy = energy;
    let mut best = spins.clone();
    let mut trace = Vec::new();

    let mut temperature = schedule.start_temperature(ctx);
    let proposals = schedule.moves_per_node * n;
    let mut levels = 0;
    while n > 1 && temperature > schedule.floor_temperature {
        levels += 1;
        let mut attempted = 0usize;
        let mut accepted = 0usize;
        for _ in 0..proposals {
            let u = rng.random_range(0..n);
            let from = spins[u];
            let to = rng.random_range(0..n);
            // relabeling a lone spin to an empty state changes nothing
            if to == from || (sizes[from] == 1 && sizes[to] == 0) {
                continue;
            }
            attempted += 1;
            let delta = -2.0 * (field[u * n + to] - field[u * n + from]);
            if delta > 0.0 && rng.random::<f64>() >= (-delta / temperature).exp() {
                continue;
            }
            accepted += 1;
            spins[u] = to;
            sizes[from] -= 1;
            sizes[to] += 1;
            let col = c.column(u);
            for w in 0..n {
                if w != u {
                    field[w * n + from] -= col[w];
                    field[w * n + to] += col[w];
                }
            }
            energy += delta;
            if energy < best_energy - 1e-12 {
                best_energy = energy;
                best.copy_from_slice(&spins);
            }
        }
        trace.push(-best_energy / ctx.c_norm());
        if attempted > 0 && (accepted as f64) < schedule.min_acceptance * attempted as f64 {
            break;
        }
        temperature *= schedule.cooling_ratio;
    }

    let min_gain = GAIN_TOLERANCE * ctx.c_norm() / 2.0;
    local_moves(c, &mut best, min_gain, 1000, &mut rng);
    let partition = Partition::new(&best);
    let q = q_value(ctx, &partition)?;
    Ok((
        DetectionResult {
            partition,
            q,
            algorithm: Algorithm::Potts,
            seed,
            iterations: levels,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compare::variation_of_information;
    use crate::detect::testing::{brute_force_max, random_context, two_block_context};
    use nalgebra::DMatrix;

    #[test]
    fn schedule_validation() {
        let bad = [
            AnnealingSchedule {
                initial_temperature: Some(0.0),
                ..Default::default()
            },
            AnnealingSchedule {
                cooling_ratio: 1.0,
                ..Default::default()
            },
            AnnealingSchedule {
                cooling_ratio: 0.0,
                ..Default::default()
            },
            AnnealingSchedule {
                floor_temperature: -1.0,
                ..Default::default()
            },
            AnnealingSchedule {
                moves_per_node: 0,
                ..Default::default()
            },
        ];
        let ctx = random_context(4, 1);
        for s in bad {
            assert!(matches!(potts(&ctx, 0, &s), Err(Error::Config(_))), "{s:?}");
        }
    }

    #[test]
    fn zero_matrix() {
        let ctx = ModularityContext::new(DMatrix::zeros(6, 6), 1.0).unwrap();
        let r = potts(&ctx, 3, &AnnealingSchedule::default()).unwrap();
        assert_eq!(r.q, 0.0);
        assert_eq!(r.partition, Partition::single(6));
    }

    #[test]
    fn recovers_two_blocks() {
        let (ctx, truth) = two_block_context(20, 0.4);
        let hits = (0..20)
            .filter(|&seed| {
                let r = potts(&ctx, seed, &AnnealingSchedule::default()).unwrap();
                variation_of_information(&r.partition, &truth).unwrap().vi == 0.0
            })
            .count();
        assert!(hits >= 19, "{hits}/20");
    }

    #[test]
    fn best_seen_is_monotone() {
        let ctx = random_context(12, 6);
        let (r, trace) = potts_traced(&ctx, 1, &AnnealingSchedule::default()).unwrap();
        assert!(!trace.is_empty());
        assert!(trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(r.q >= trace.last().unwrap() - 1e-12);
    }

    #[test]
    fn reaches_brute_force_optimum() {
        let ctx = random_context(10, 21);
        let best = brute_force_max(&ctx);
        let hits = (0..20)
            .filter(|&seed| {
                potts(&ctx, seed, &AnnealingSchedule::default()).unwrap().q >= best - 1e-9
            })
            .count();
        assert!(hits >= 18, "{hits}/20");
    }
}
