use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SectorMap;
use crate::modularity::{ModularityContext, Partition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityNode {
    pub id: usize,
    pub size: usize,
    /// Sector name to fraction of members.
    pub composition: BTreeMap<String, f64>,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityEdge {
    pub source: usize,
    pub target: usize,
    /// Mean group-mode correlation over all cross pairs.
    pub mean_weight: f64,
}

/// Communities as nodes, residual group-mode coupling as edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityGraphReport {
    pub nodes: Vec<CommunityNode>,
    pub edges: Vec<CommunityEdge>,
}

impl CommunityGraphReport {
    /// `source,target,mean_weight` edge list.
    pub fn write_edge_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Validation(format!("csv write failed: {e}"));
        w.write_record(["source", "target", "mean_weight"])
            .map_err(err)?;
        for e in &self.edges {
            w.write_record([
                e.source.to_string(),
                e.target.to_string(),
                format!("{:?}", e.mean_weight),
            ])
            .map_err(err)?;
        }
        w.flush()
            .map_err(|e| Error::Validation(format!("csv write failed: {e}")))
    }
}

/// Builds the community graph of `p`; `labels` names the nodes of `ctx`.
pub fn community_graph(
    ctx: &ModularityContext,
    p: &Partition,
    labels: &[String],
    sectors: &SectorMap,
) -> Result<CommunityGraphReport> {
    if p.len() != ctx.n() || labels.len() != ctx.n() {
        return Err(Error::Usage(format!(
            "partition ({}) and labels ({}) must cover the {} nodes",
            p.len(),
            labels.len(),
            ctx.n()
        )));
    }
    let members = p.members();
    let nodes = members
        .iter()
        .enumerate()
        .map(|(id, nodes)| {
            let mut composition = BTreeMap::new();
            for &i in nodes {
                *composition
                    .entry(sectors.sector_of(&labels[i]).to_string())
                    .or_insert(0.0) += 1.0;
            }
            composition
                .values_mut()
                .for_each(|v| *v /= nodes.len() as f64);
            CommunityNode {
                id,
                size: nodes.len(),
                composition,
                members: nodes.iter().map(|&i| labels[i].clone()).collect(),
            }
        })
        .collect();
    let c = ctx.c_group();
    let mut edges = Vec::new();
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            let total: f64 = members[a]
                .iter()
                .flat_map(|&i| members[b].iter().map(move |&j| c[(i, j)]))
                .sum();
            edges.push(CommunityEdge {
                source: a,
                target: b,
                mean_weight: total / (members[a].len() * members[b].len()) as f64,
            });
        }
    }
    Ok(CommunityGraphReport { nodes, edges })
}
