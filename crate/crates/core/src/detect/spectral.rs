use std::collections::VecDeque;

use nalgebra::DMatrix;

use super::{Algorithm, DetectionResult, GAIN_TOLERANCE};
use crate::error::Result;
use crate::modularity::{q_value, ModularityContext, Partition};
use crate::spectra::sorted_eigen;

/// Recursive bisection by the leading eigenvector of the restricted
/// modularity matrix `B(S) = C_SS − diag(Σ_{k∈S} C_ik)`.
///
/// A set is split by the sign of the eigenvector entries; the split is kept
/// only when it raises Q by more than [`GAIN_TOLERANCE`]. Bisection cannot
/// undo an early cut, so the finished sets are then merged greedily, best
/// pair first, while a merge raises Q. Deterministic.
pub fn spectral(ctx: &ModularityContext) -> Result<DetectionResult> {
    let n = ctx.n();
    let c = ctx.c_group();
    let mut queue = VecDeque::from([(0..n).collect::<Vec<usize>>()]);
    let mut done = Vec::new();
    let mut splits = 0;

    while let Some(set) = queue.pop_front() {
        match bisect(c, &set)? {
            Some((left, right)) if split_gain(c, &left, &right) / ctx.c_norm() > GAIN_TOLERANCE => {
                splits += 1;
                queue.push_back(left);
                queue.push_back(right);
            }
            _ => done.push(set),
        }
    }
    let merges = merge_pass(c, ctx.c_norm(), &mut done);

    let mut labels = vec![0; n];
    for (k, set) in done.iter().enumerate() {
        for &i in set {
            labels[i] = k;
        }
    }
    let partition = Partition::new(&labels);
    Ok(DetectionResult {
        q: q_value(ctx, &partition)?,
        partition,
        algorithm: Algorithm::Spectral,
        seed: 0,
        iterations: splits + merges,
    })
}

/// Sign split of the leading eigenvector, or `None` when all entries share a sign.
fn bisect(c: &DMatrix<f64>, set: &[usize]) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
    if set.len() < 2 {
        return Ok(None);
    }
    let m = set.len();
    let mut b = DMatrix::from_fn(m, m, |a, d| c[(set[a], set[d])]);
    for a in 0..m {
        let row_sum: f64 = (0..m).map(|d| c[(set[a], set[d])]).sum();
        b[(a, a)] -= row_sum;
    }
    let (_, vectors) = sorted_eigen(&b)?;
    let lead = vectors.column(0);
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (a, &i) in set.iter().enumerate() {
        if lead[a] > 0.0 {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    if left.is_empty() || right.is_empty() {
        return Ok(None);
    }
    Ok(Some((left, right)))
}

/// Merges the pair of sets with the largest positive coupling until no
/// merge gains more than [`GAIN_TOLERANCE`]. Returns the number of merges.
fn merge_pass(c: &DMatrix<f64>, c_norm: f64, sets: &mut Vec<Vec<usize>>) -> usize {
    let mut merges = 0;
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                let gain = -split_gain(c, &sets[a], &sets[b]);
                if gain / c_norm > GAIN_TOLERANCE && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else {
            return merges;
        };
        let absorbed = sets.remove(b);
        sets[a].extend(absorbed);
        merges += 1;
    }
}

/// Unnormalized change in Q from cutting a set into `left` and `right`.
fn split_gain(c: &DMatrix<f64>, left: &[usize], right: &[usize]) -> f64 {
    let cross: f64 = left
        .iter()
        .map(|&i| right.iter().map(|&j| c[(i, j)]).sum::<f64>())
        .sum();
    -2.0 * cross
}
