//! Modularity of a partition measured against the group component of a
//! correlation matrix.
//!
//! `Q(σ) = (1 / c_norm) Σ_ij C_group[i][j] δ(σ_i, σ_j)`, diagonal included.
//! The normalizer is the sum of all entries of the raw correlation matrix.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::spectra::ModeDecomposition;

/// Community assignment with ids renumbered in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    /// Canonicalizes arbitrary community ids.
    pub fn new<T: Eq + std::hash::Hash + Copy>(raw: &[T]) -> Self {
        let mut ids = HashMap::new();
        let labels = raw
            .iter()
            .map(|v| {
                let next = ids.len();
                *ids.entry(*v).or_insert(next)
            })
            .collect();
        Self { labels }
    }

    /// Every node in its own community.
    pub fn singletons(n: usize) -> Self {
        Self {
            labels: (0..n).collect(),
        }
    }

    /// All nodes in one community.
    pub fn single(n: usize) -> Self {
        Self { labels: vec![0; n] }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn community_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.community_count()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Node indices of each community.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.community_count()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// The partition with `node` moved to community `target`; any id at or
    /// beyond [`community_count`](Self::community_count) opens a new one.
    pub fn with_move(&self, node: usize, target: usize) -> Result<Self> {
        if node >= self.len() {
            return Err(Error::Usage(format!(
                "node {node} out of range for {} nodes",
                self.len()
            )));
        }
        let mut raw = self.labels.clone();
        raw[node] = target.min(self.community_count());
        Ok(Self::new(&raw))
    }
}

/// Group matrix plus normalizer; immutable once built.
#[derive(Debug, Clone)]
pub struct ModularityContext {
    c_group: DMatrix<f64>,
    c_norm: f64,
}

impl ModularityContext {
    pub fn new(c_group: DMatrix<f64>, c_norm: f64) -> Result<Self> {
        if c_group.nrows() != c_group.ncols() {
            return Err(Error::Size("group matrix is not square".into()));
        }
        if (&c_group - c_group.transpose()).amax() > 1e-12 {
            return Err(Error::Validation("group matrix is not symmetric".into()));
        }
        if !(c_norm > 0.0 && c_norm.is_finite()) {
            return Err(Error::Normalization(format!(
                "normalizer must be positive, got {c_norm}"
            )));
        }
        Ok(Self { c_group, c_norm })
    }

    pub fn c_group(&self) -> &DMatrix<f64> {
        &self.c_group
    }

    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }

    pub fn n(&self) -> usize {
        self.c_group.nrows()
    }

    /// Copy with a different normalizer.
    pub fn with_norm(&self, c_norm: f64) -> Result<Self> {
        Self::new(self.c_group.clone(), c_norm)
    }

    /// Whether the group matrix is identically zero.
    pub fn is_trivial(&self) -> bool {
        self.c_group.iter().all(|&v| v == 0.0)
    }
}

/// Context from a mode split of `c`, normalized by `Σ_ij C_ij`.
pub fn make_context(modes: &ModeDecomposition, c: &CorrelationMatrix) -> Result<ModularityContext> {
    if modes.c_group.nrows() != c.n() {
        return Err(Error::Size(format!(
            "group matrix has {} rows, correlation matrix {}",
            modes.c_group.nrows(),
            c.n()
        )));
    }
    let c_norm = c.values().sum();
    if !(c_norm > 0.0) {
        return Err(Error::Normalization(format!(
            "sum of correlations is {c_norm}; cannot normalize modularity"
        )));
    }
    ModularityContext::new(modes.c_group.clone(), c_norm)
}

fn check_size(ctx: &ModularityContext, p: &Partition) -> Result<()> {
    if p.len() != ctx.n() {
        return Err(Error::Usage(format!(
            "partition covers {} nodes, context has {}",
            p.len(),
            ctx.n()
        )));
    }
    Ok(())
}

pub fn q_value(ctx: &ModularityContext, p: &Partition) -> Result<f64> {
    check_size(ctx, p)?;
    Ok(q_raw(ctx, p.labels()))
}

/// Modularity of an unchecked, not necessarily canonical label vector.
pub(crate) fn q_raw(ctx: &ModularityContext, labels: &[usize]) -> f64 {
    let n = labels.len();
    let mut total = 0.0;
    for j in 0..n {
        let col = ctx.c_group.column(j);
        for i in 0..n {
            if labels[i] == labels[j] {
                total += col[i];
            }
        }
    }
    total / ctx.c_norm
}

/// `Q(p with node moved to target) − Q(p)`, in O(N).
pub fn delta_q_move(
    ctx: &ModularityContext,
    p: &Partition,
    node: usize,
    target: usize,
) -> Result<f64> {
    check_size(ctx, p)?;
    if node >= p.len() {
        return Err(Error::Usage(format!(
            "node {node} out of range for {} nodes",
            p.len()
        )));
    }
    let current = p.labels()[node];
    if target == current {
        return Ok(0.0);
    }
    let row = ctx.c_group.column(node);
    let mut to_target = 0.0;
    let mut to_current = 0.0;
    for (j, &l) in p.labels().iter().enumerate() {
        if j == node {
            continue;
        }
        if l == target {
            to_target += row[j];
        } else if l == current {
            to_current += row[j];
        }
    }
    Ok(2.0 * (to_target - to_current) / ctx.c_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{decompose_modes, eigendecompose};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn corr(m: DMatrix<f64>) -> CorrelationMatrix {
        let labels = (0..m.nrows()).map(|i| format!("S{i}")).collect();
        CorrelationMatrix::from_matrix(labels, m, 1).unwrap()
    }

    /// 6 nodes, blocks {0,1,2} and {3,4,5}: global 0.3, intra-block 0.5.
    fn planted() -> CorrelationMatrix {
        corr(DMatrix::from_fn(6, 6, |i, j| {
            if i == j {
                1.0
            } else if i / 3 == j / 3 {
                0.8
            } else {
                0.3
            }
        }))
    }

    /// Brute-force modularity straight from the double sum.
    fn q_brute(c_group: &DMatrix<f64>, c_norm: f64, labels: &[usize]) -> f64 {
        let n = labels.len();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    q += c_group[(i, j)];
                }
            }
        }
        q / c_norm
    }

    #[test]
    fn canonical_labels() {
        let p = Partition::new(&[7, 7, 3, 9, 3]);
        assert_eq!(p.labels(), [0, 0, 1, 2, 1]);
        assert_eq!(p.community_count(), 3);
        assert_eq!(p.community_sizes(), vec![2, 2, 1]);
        assert_eq!(p.members(), vec![vec![0, 1], vec![2, 4], vec![3]]);
        assert_eq!(p.with_move(3, 0).unwrap().labels(), [0, 0, 1, 0, 1]);
        assert_eq!(p.with_move(0, 99).unwrap().labels(), [0, 1, 2, 3, 2]);
        assert!(p.with_move(5, 0).is_err());
    }

    #[test]
    fn context_normalizers() {
        let id = corr(DMatrix::identity(5, 5));
        let modes = decompose_modes(&eigendecompose(&id, 100).unwrap());
        let ctx = make_context(&modes, &id).unwrap();
        assert_eq!(ctx.c_norm(), 5.0);
        assert!(ctx.is_trivial());

        let ones = corr(DMatrix::from_element(4, 4, 1.0));
        let modes = decompose_modes(&eigendecompose(&ones, 100).unwrap());
        assert!((make_context(&modes, &ones).unwrap().c_norm() - 16.0).abs() < 1e-12);

        let c = planted();
        let modes = decompose_modes(&eigendecompose(&c, 1000).unwrap());
        let direct = 6.0 + 2.0 * (6.0 * 0.8 + 9.0 * 0.3);
        assert!((make_context(&modes, &c).unwrap().c_norm() - direct).abs() < 1e-12);
    }

    #[test]
    fn negative_normalizer_is_rejected() {
        let c = corr(DMatrix::from_fn(
            2,
            2,
            |i, j| if i == j { 1.0 } else { -1.0 },
        ));
        let modes = decompose_modes(&eigendecompose(&c, 100).unwrap());
        assert!(matches!(
            make_context(&modes, &c),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn q_special_cases() {
        let ctx = ModularityContext::new(DMatrix::zeros(4, 4), 3.0).unwrap();
        for p in [
            Partition::single(4),
            Partition::singletons(4),
            Partition::new(&[0, 1, 0, 1]),
        ] {
            assert_eq!(q_value(&ctx, &p).unwrap(), 0.0);
            assert_eq!(delta_q_move(&ctx, &p, 2, 0).unwrap(), 0.0);
        }
        let m = random_symmetric(5, 1);
        let ctx = ModularityContext::new(m.clone(), 2.0).unwrap();
        let diag = m.diagonal().sum() / 2.0;
        assert!((q_value(&ctx, &Partition::singletons(5)).unwrap() - diag).abs() < 1e-15);
        assert!(q_value(&ctx, &Partition::single(4)).is_err());
    }

    #[test]
    fn planted_beats_merged() {
        let c = planted();
        let modes = decompose_modes(&eigendecompose(&c, 1000).unwrap());
        let ctx = make_context(&modes, &c).unwrap();
        let truth = Partition::new(&[0, 0, 0, 1, 1, 1]);
        let q_truth = q_value(&ctx, &truth).unwrap();
        let q_one = q_value(&ctx, &Partition::single(6)).unwrap();
        assert!((q_truth - q_brute(ctx.c_group(), ctx.c_norm(), truth.labels())).abs() < 1e-12);
        assert!(q_truth > q_one, "{q_truth} vs {q_one}");
    }

    #[test]
    fn delta_matches_recomputation() {
        let ctx = ModularityContext::new(random_symmetric(8, 3), 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = Partition::new(
            &(0..8)
                .map(|_| rng.random_range(0..3))
                .collect::<Vec<usize>>(),
        );
        for node in 0..8 {
            assert_eq!(delta_q_move(&ctx, &p, node, p.labels()[node]).unwrap(), 0.0);
            for target in 0..=p.community_count() {
                let moved = p.with_move(node, target).unwrap();
                let want = q_brute(ctx.c_group(), 4.0, moved.labels())
                    - q_brute(ctx.c_group(), 4.0, p.labels());
                let got = delta_q_move(&ctx, &p, node, target).unwrap();
                assert!(
                    (got - want).abs() < 1e-12,
                    "node {node} -> {target}: {got} vs {want}"
                );
            }
        }
        assert!(delta_q_move(&ctx, &p, 8, 0).is_err());
    }

    #[test]
    fn incremental_tracking() {
        let n = 50;
        let ctx = ModularityContext::new(random_symmetric(n, 4), 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = Partition::new(
            &(0..n)
                .map(|_| rng.random_range(0..5))
                .collect::<Vec<usize>>(),
        );
        let mut q = q_value(&ctx, &p).unwrap();
        for _ in 0..100 {
            let node = rng.random_range(0..n);
            let target = rng.random_range(0..=p.community_count());
            q += delta_q_move(&ctx, &p, node, target).unwrap();
            p = p.with_move(node, target).unwrap();
        }
        assert!((q - q_value(&ctx, &p).unwrap()).abs() < 1e-9);
    }

    fn arb_labels(n: usize) -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0usize..4, n)
    }

    proptest! {
        #[test]
        fn relabeling_leaves_q_unchanged(labels in arb_labels(9), shift in 1usize..50, seed in 0u64..100) {
            let ctx = ModularityContext::new(random_symmetric(9, seed), 3.0).unwrap();
            let relabeled: Vec<usize> = labels.iter().map(|l| (l * 7 + shift) % 1000).collect();
            let a = q_value(&ctx, &Partition::new(&labels)).unwrap();
            let b = q_value(&ctx, &Partition::new(&relabeled)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn normalizer_never_changes_ordering(
            a in arb_labels(9), b in arb_labels(9), seed in 0u64..100, scale in 0.01f64..100.0,
        ) {
            let ctx = ModularityContext::new(random_symmetric(9, seed), 3.0).unwrap();
            let other = ctx.with_norm(3.0 * scale).unwrap();
            let (pa, pb) = (Partition::new(&a), Partition::new(&b));
            let before = q_value(&ctx, &pa).unwrap() - q_value(&ctx, &pb).unwrap();
            let after = q_value(&other, &pa).unwrap() - q_value(&other, &pb).unwrap();
            if before.abs() > 1e-12 {
                prop_assert_eq!(before > 0.0, after > 0.0);
            }
        }
    }
}
