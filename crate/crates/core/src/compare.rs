//! Distances between partitions: mutual information, joint entropy, the
//! normalized variation of information `1 − I/H`, and the fraction of nodes
//! that switch community under the best one-to-one community matching.
//!
//! All quantities are computed on the contingency table of the two
//! partitions, in nats.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::detect::EnsembleResult;
use crate::error::{Error, Result};
use crate::modularity::Partition;

/// Distance summary for one pair of partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViReport {
    pub mutual_information: f64,
    pub joint_entropy: f64,
    pub vi: f64,
    pub switching_fraction: f64,
}

/// Community `a` of the first partition matched to community `b` of the
/// second, sharing `overlap` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub first: usize,
    pub second: usize,
    pub overlap: usize,
}

struct Contingency {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// Nonzero cells `(a, b, count)`.
    cells: Vec<(usize, usize, usize)>,
    table: Vec<Vec<usize>>,
}

impl Contingency {
    fn new(p1: &Partition, p2: &Partition) -> Result<Self> {
        if p1.len() != p2.len() {
            return Err(Error::Usage(format!(
                "partitions cover {} and {} nodes",
                p1.len(),
                p2.len()
            )));
        }
        let (k1, k2) = (p1.community_count(), p2.community_count());
        let mut table = vec![vec![0usize; k2]; k1];
        for (&a, &b) in p1.labels().iter().zip(p2.labels()) {
            table[a][b] += 1;
        }
        let cells = table
            .iter()
            .enumerate()
            .flat_map(|(a, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(move |(b, &c)| (a, b, c))
            })
            .collect();
        Ok(Self {
            n: p1.len(),
            rows: table.iter().map(|r| r.iter().sum()).collect(),
            cols: (0..k2).map(|b| table.iter().map(|r| r[b]).sum()).collect(),
            cells,
            table,
        })
    }

    fn ln_p(&self, count: usize) -> f64 {
        (count as f64 / self.n as f64).ln()
    }

    fn p(&self, count: usize) -> f64 {
        count as f64 / self.n as f64
    }

    /// Terms are summed in sorted order so swapping the partitions gives
    /// bitwise-identical results.
    fn mutual_information(&self) -> f64 {
        let terms = self.cells.iter().map(|&(a, b, c)| {
            let marginals = self.ln_p(self.rows[a]) + self.ln_p(self.cols[b]);
            self.p(c) * (self.ln_p(c) - marginals)
        });
        sorted_sum(terms)
    }

    fn joint_entropy(&self) -> f64 {
        sorted_sum(
            self.cells
                .iter()
                .map(|&(_, _, c)| -self.p(c) * self.ln_p(c)),
        )
    }

    fn best_matching(&self) -> Vec<MatchedPair> {
        let (k1, k2) = (self.rows.len(), self.cols.len());
        if k1 == 0 {
            return Vec::new();
        }
        // kuhn_munkres needs rows <= columns
        let transpose = k1 > k2;
        let (r, c) = if transpose { (k2, k1) } else { (k1, k2) };
        let weights = Matrix::from_fn(r, c, |(i, j)| {
            let count = if transpose {
                self.table[j][i]
            } else {
                self.table[i][j]
            };
            count as i64
        });
        let (_, assignment) = kuhn_munkres(&weights);
        let mut pairs: Vec<MatchedPair> = assignment
            .into_iter()
            .enumerate()
            .map(|(i, j)| {
                let (first, second) = if transpose { (j, i) } else { (i, j) };
                MatchedPair {
                    first,
                    second,
                    overlap: self.table[first][second],
                }
            })
            .filter(|m| m.overlap > 0)
            .collect();
        pairs.sort_by_key(|m| (m.first, m.second));
        pairs
    }
}

fn sorted_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut terms: Vec<f64> = terms.collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// `I = Σ_ab p(a,b) ln(p(a,b) / (p(a) p(b)))`.
pub fn mutual_information(p1: &Partition, p2: &Partition) -> Result<f64> {
    Ok(Contingency::new(p1, p2)?.mutual_information())
}

/// `H = −Σ_ab p(a,b) ln p(a,b)`.
pub fn joint_entropy(p1: &Partition, p2: &Partition) -> Result<f64> {
    Ok(Contingency::new(p1, p2)?.joint_entropy())
}

/// Shannon entropy of a single partition.
pub fn entropy(p: &Partition) -> f64 {
    Contingency::new(p, p).map_or(0.0, |c| c.joint_entropy())
}

/// Fraction of nodes outside the matched overlap of an optimal one-to-one
/// community matching.
pub fn switching_fraction(p1: &Partition, p2: &Partition) -> Result<f64> {
    let table = Contingency::new(p1, p2)?;
    Ok(switching_from(&table, &table.best_matching()))
}

fn switching_from(table: &Contingency, matching: &[MatchedPair]) -> f64 {
    if table.n == 0 {
        return 0.0;
    }
    let kept: usize = matching.iter().map(|m| m.overlap).sum();
    1.0 - kept as f64 / table.n as f64
}

/// The optimal community matching used by [`switching_fraction`].
pub fn community_matching(p1: &Partition, p2: &Partition) -> Result<Vec<MatchedPair>> {
    Ok(Contingency::new(p1, p2)?.best_matching())
}

/// `vi = 1 − I/H`, with `vi = 0` when both partitions are a single community.
pub fn variation_of_information(p1: &Partition, p2: &Partition) -> Result<ViReport> {
    let table = Contingency::new(p1, p2)?;
    let mutual_information = table.mutual_information();
    let joint_entropy = table.joint_entropy();
    let vi = if joint_entropy > 0.0 {
        (1.0 - mutual_information / joint_entropy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(ViReport {
        mutual_information,
        joint_entropy,
        vi,
        switching_fraction: switching_from(&table, &table.best_matching()),
    })
}

/// The closest pair between the max-modularity partitions of two ensembles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimalViPair {
    pub first: Partition,
    pub second: Partition,
    pub report: ViReport,
}

/// Scans every pair of distinct max-Q partitions and returns the one with
/// the smallest VI; ties go to the lexicographically smallest pair.
pub fn minimal_vi_pair(e1: &EnsembleResult, e2: &EnsembleResult) -> Result<MinimalViPair> {
    let (a_set, b_set) = (e1.max_q_partitions(), e2.max_q_partitions());
    if a_set.is_empty() || b_set.is_empty() {
        return Err(Error::Usage("ensemble has no runs".into()));
    }
    let mut best: Option<MinimalViPair> = None;
    for a in &a_set {
        for b in &b_set {
            let report = variation_of_information(a, b)?;
            // sets are sorted, so strict improvement keeps the canonical tie-break
            if best.as_ref().is_none_or(|cur| report.vi < cur.report.vi) {
                best = Some(MinimalViPair {
                    first: (*a).clone(),
                    second: (*b).clone(),
                    report,
                });
            }
        }
    }
    Ok(best.expect("non-empty sets"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn p(labels: &[usize]) -> Partition {
        Partition::new(labels)
    }

    #[test]
    fn hand_values() {
        let a = p(&[0, 0, 1, 1]);
        assert!((mutual_information(&a, &a).unwrap() - LN_2).abs() < 1e-15);
        assert!((joint_entropy(&a, &a).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(mutual_information(&Partition::single(4), &a).unwrap(), 0.0);
        assert!(mutual_information(&a, &p(&[0, 1, 0, 1])).unwrap().abs() < 1e-15);
        let four = p(&[0, 1, 2, 3]);
        assert!((joint_entropy(&a, &four).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(
            joint_entropy(&Partition::single(4), &Partition::single(4)).unwrap(),
            0.0
        );
    }

    #[test]
    fn vi_values() {
        let a = p(&[0, 0, 1, 1]);
        assert_eq!(variation_of_information(&a, &a).unwrap().vi, 0.0);
        assert!((variation_of_information(&a, &p(&[0, 1, 2, 3])).unwrap().vi - 0.5).abs() < 1e-12);
        assert!((variation_of_information(&a, &p(&[0, 1, 0, 1])).unwrap().vi - 1.0).abs() < 1e-12);
        let one = Partition::single(4);
        assert_eq!(variation_of_information(&one, &one).unwrap().vi, 0.0);
        assert!(variation_of_information(&a, &Partition::single(3)).is_err());
    }

    #[test]
    fn switching_values() {
        let a = p(&[0, 0, 1, 1]);
        assert_eq!(switching_fraction(&a, &a).unwrap(), 0.0);
        assert_eq!(switching_fraction(&a, &p(&[0, 0, 0, 1])).unwrap(), 0.25);
        assert_eq!(switching_fraction(&a, &p(&[1, 1, 0, 0])).unwrap(), 0.0);
        // more communities on the left than on the right
        assert_eq!(switching_fraction(&p(&[0, 1, 2, 3]), &a).unwrap(), 0.5);
        assert!(switching_fraction(&a, &p(&[0])).is_err());
        let m = community_matching(&a, &p(&[0, 0, 0, 1])).unwrap();
        assert_eq!(
            m,
            vec![
                MatchedPair {
                    first: 0,
                    second: 0,
                    overlap: 2
                },
                MatchedPair {
                    first: 1,
                    second: 1,
                    overlap: 1
                }
            ]
        );
    }

    /// Exhaustive matching over all injections, for small tables.
    fn brute_switching(p1: &Partition, p2: &Partition) -> f64 {
        fn go(a: usize, table: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
            if a == table.len() {
                return 0;
            }
            let mut best = go(a + 1, table, used);
            for b in 0..used.len() {
                if !used[b] {
                    used[b] = true;
                    best = best.max(table[a][b] + go(a + 1, table, used));
                    used[b] = false;
                }
            }
            best
        }
        let mut table = vec![vec![0; p2.community_count()]; p1.community_count()];
        for (&a, &b) in p1.labels().iter().zip(p2.labels()) {
            table[a][b] += 1;
        }
        let kept = go(0, &table, &mut vec![false; p2.community_count()]);
        1.0 - kept as f64 / p1.len() as f64
    }

    fn arb_partition(n: usize, k: usize) -> impl Strategy<Value = Partition> {
        prop::collection::vec(0..k, n).prop_map(|l| Partition::new(&l))
    }

    proptest! {
        #[test]
        fn matching_is_optimal(a in arb_partition(12, 5), b in arb_partition(12, 4)) {
            let got = switching_fraction(&a, &b).unwrap();
            prop_assert!((got - brute_switching(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn entropy_bounds(a in arb_partition(30, 6), b in arb_partition(30, 6)) {
            let i = mutual_information(&a, &b).unwrap();
            let h = joint_entropy(&a, &b).unwrap();
            prop_assert!(i >= -1e-12);
            prop_assert!(i <= entropy(&a).min(entropy(&b)) + 1e-12);
            prop_assert!(entropy(&a).max(entropy(&b)) <= h + 1e-12);
        }

        #[test]
        fn relabeling_invariance(a in arb_partition(20, 5), b in arb_partition(20, 5)) {
            let relabeled: Vec<usize> = b.labels().iter().map(|l| 10 - l).collect();
            let b2 = Partition::new(&relabeled);
            let r1 = variation_of_information(&a, &b).unwrap();
            let r2 = variation_of_information(&a, &b2).unwrap();
            prop_assert!((r1.vi - r2.vi).abs() < 1e-15);
            prop_assert_eq!(r1.switching_fraction, r2.switching_fraction);
        }
    }
}
