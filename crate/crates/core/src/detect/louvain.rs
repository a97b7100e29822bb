use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{local_moves, Algorithm, DetectionResult, GAIN_TOLERANCE};
use crate::modularity::{q_value, ModularityContext, Partition};

const MAX_SWEEPS: usize = 1000;
const MAX_ROUNDS: usize = 100;

/// Multilevel Louvain search on the dense signed group matrix.
///
/// Each round runs greedy node moves on the original nodes, then repeatedly
/// aggregates communities into super-nodes (summing matrix blocks) and moves
/// those, until a level makes no move. Rounds repeat until a whole round is
/// idle, so the result cannot be improved by moving any single node.
/// An all-zero group matrix gives a single community.
pub fn louvain(ctx: &ModularityContext, seed: u64) -> DetectionResult {
    let n = ctx.n();
    if ctx.is_trivial() {
        return DetectionResult::trivial(n, Algorithm::Louvain, seed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // raw-weight gain equivalent to GAIN_TOLERANCE in Q
    let min_gain = GAIN_TOLERANCE * ctx.c_norm() / 2.0;
    let mut assign: Vec<usize> = (0..n).collect();
    let mut sweeps = 0;

    for _ in 0..MAX_ROUNDS {
        let (mut improved, s) =
            local_moves(ctx.c_group(), &mut assign, min_gain, MAX_SWEEPS, &mut rng);
        sweeps += s;
        loop {
            let (node_of, k) = compact(&assign);
            if k < 2 {
                break;
            }
            let w = aggregate(ctx.c_group(), &node_of, k);
            let mut super_comm: Vec<usize> = (0..k).collect();
            let (moved, s) = local_moves(&w, &mut super_comm, min_gain, MAX_SWEEPS, &mut rng);
            sweeps += s;
            if !moved {
                break;
            }
            improved = true;
            for (a, &node) in assign.iter_mut().zip(&node_of) {
                *a = super_comm[node];
            }
        }
        if !improved {
            break;
        }
    }

    let partition = Partition::new(&assign);
    DetectionResult {
        q: q_value(ctx, &partition).expect("partition sized to context"),
        partition,
        algorithm: Algorithm::Louvain,
        seed,
        iterations: sweeps,
    }
}

/// Renumbers community ids to `0..k`.
fn compact(assign: &[usize]) -> (Vec<usize>, usize) {
    let p = Partition::new(assign);
    let k = p.community_count();
    (p.labels().to_vec(), k)
}

/// `W[a][b] = Σ_{i ∈ a, j ∈ b} C[i][j]`.
fn aggregate(c: &DMatrix<f64>, node_of: &[usize], k: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(k, k);
    for j in 0..c.ncols() {
        let col = c.column(j);
        let b = node_of[j];
        for i in 0..c.nrows() {
            w[(node_of[i], b)] += col[i];
        }
    }
    w
}
