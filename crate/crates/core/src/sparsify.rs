//! Community-proportional, betweenness-ranked graph reduction.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::community::CommunityStructure;
use crate::error::{Error, Result};
use crate::graph::{betweenness, Graph, Label};

/// How excess edges are removed when the induced subgraph is over budget.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrunePolicy {
    /// Uniformly without replacement, driven by the seed.
    #[default]
    Random,
    /// Lowest endpoint-degree sum first, ties by label pair.
    DegreeKeep,
}

impl std::str::FromStr for PrunePolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PrunePolicy::Random),
            "degree_keep" => Ok(PrunePolicy::DegreeKeep),
            _ => Err(Error::Config(format!("unknown prune policy `{s}`"))),
        }
    }
}

/// Bijection between working-graph labels and original-graph labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeMap {
    pairs: Vec<(Label, Label)>,
    to_original: HashMap<Label, Label>,
    to_working: HashMap<Label, Label>,
}

impl NodeMap {
    pub fn new(pairs: Vec<(Label, Label)>) -> Result<Self> {
        let to_original: HashMap<_, _> = pairs.iter().cloned().collect();
        let to_working: HashMap<_, _> = pairs.iter().map(|(w, o)| (o.clone(), w.clone())).collect();
        if to_original.len() != pairs.len() || to_working.len() != pairs.len() {
            return Err(Error::invalid("node map is not a bijection"));
        }
        Ok(NodeMap {
            pairs,
            to_original,
            to_working,
        })
    }

    pub fn identity(g: &Graph) -> Self {
        let pairs = g.labels().iter().map(|l| (l.clone(), l.clone())).collect();
        NodeMap::new(pairs).expect("labels are unique")
    }

    pub fn to_original(&self, working: &Label) -> Option<&Label> {
        self.to_original.get(working)
    }

    pub fn to_working(&self, original: &Label) -> Option<&Label> {
        self.to_working.get(original)
    }

    /// `(working, original)` pairs in working-label order.
    pub fn pairs(&self) -> &[(Label, Label)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (working, original) in &self.pairs {
            writeln!(w, "{working} {original}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    pub nodes_selected: usize,
    pub edges_before: usize,
    pub edges_removed: usize,
    pub isolated_removed: usize,
    pub components_dropped: usize,
    pub nodes_final: usize,
    pub edges_final: usize,
    /// Communities whose quota exceeded their size and was clamped.
    pub clamped_communities: Vec<usize>,
}

/// A reduced graph, relabeled `0..n` in original-label order, plus the map
/// back to the graph it came from.
#[derive(Clone, Debug)]
pub struct SparsifiedGraph {
    pub graph: Graph,
    pub node_map: NodeMap,
    /// Per-community selection counts after clamping.
    pub quotas: Vec<usize>,
    /// Per-community selected original labels, in selection order, before
    /// edge pruning and component extraction.
    pub selections: Vec<Vec<Label>>,
    pub prune_report: PruneReport,
    /// False when the graph was passed through unchanged.
    pub sparsified: bool,
}

impl SparsifiedGraph {
    /// Wraps a graph unchanged with an identity node map.
    pub fn pass_through(g: &Graph) -> Self {
        SparsifiedGraph {
            graph: g.clone(),
            node_map: NodeMap::identity(g),
            quotas: Vec::new(),
            selections: Vec::new(),
            prune_report: PruneReport {
                nodes_selected: g.node_count(),
                edges_before: g.edge_count(),
                nodes_final: g.node_count(),
                edges_final: g.edge_count(),
                ..PruneReport::default()
            },
            sparsified: false,
        }
    }

    /// Writes `{stem}.edges`, `{stem}.nodemap` and `{stem}.report.json`.
    pub fn write_dir(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let edges = dir.join(format!("{stem}.edges"));
        let map = dir.join(format!("{stem}.nodemap"));
        let report = dir.join(format!("{stem}.report.json"));
        std::fs::write(&edges, self.graph.to_edge_list_string()).map_err(|e| Error::io(&edges, e))?;
        let mut buf = Vec::new();
        self.node_map.write(&mut buf).expect("write to Vec");
        std::fs::write(&map, buf).map_err(|e| Error::io(&map, e))?;
        let json = serde_json::to_string_pretty(&self.prune_report)?;
        std::fs::write(&report, json).map_err(|e| Error::io(&report, e))?;
        Ok(vec![edges, map, report])
    }
}

/// Per-community selection counts: `ceil(|C_i| / total_nodes · n_target)`.
/// The sum may exceed `n_target`.
pub fn community_quotas(
    cs: &CommunityStructure,
    total_nodes: usize,
    n_target: usize,
) -> Result<Vec<usize>> {
    if cs.is_empty() {
        return Err(Error::invalid("empty community structure"));
    }
    if n_target == 0 || total_nodes == 0 {
        return Err(Error::invalid("target and node count must be positive"));
    }
    Ok(cs
        .sizes()
        .into_iter()
        .map(|size| (size * n_target).div_ceil(total_nodes))
        .collect())
}

/// Selects, prunes, and extracts the largest component.
///
/// Betweenness is computed once on the full graph and ranked within each
/// community, highest first, ties by ascending label.
pub fn sparsify(
    g: &Graph,
    cs: &CommunityStructure,
    n_v: usize,
    n_e: usize,
    policy: PrunePolicy,
    rng_seed: u64,
) -> Result<SparsifiedGraph> {
    if n_v == 0 || n_e == 0 {
        return Err(Error::invalid("node and edge targets must be positive"));
    }
    if cs.node_count() != g.node_count() {
        return Err(Error::invalid("community structure does not match graph"));
    }
    let raw_quotas = community_quotas(cs, g.node_count(), n_v)?;
    let scores = betweenness(g);

    let mut report = PruneReport::default();
    let mut quotas = Vec::with_capacity(cs.len());
    let mut selections = Vec::with_capacity(cs.len());
    let mut selected = Vec::new();
    for (c, members) in cs.communities().iter().enumerate() {
        let quota = if raw_quotas[c] > members.len() {
            report.clamped_communities.push(c);
            members.len()
        } else {
            raw_quotas[c]
        };
        let mut ranked = members.clone();
        ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        ranked.truncate(quota);
        selections.push(ranked.iter().map(|&v| g.label(v).clone()).collect());
        selected.extend_from_slice(&ranked);
        quotas.push(quota);
    }
    report.nodes_selected = selected.len();

    let induced = g.induced_by_indices(&selected);
    let mut edges: Vec<(usize, usize)> = induced.edges().collect();
    report.edges_before = edges.len();
    if edges.len() > n_e {
        let excess = edges.len() - n_e;
        let mut remove = vec![false; edges.len()];
        match policy {
            PrunePolicy::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
                for i in sample(&mut rng, edges.len(), excess) {
                    remove[i] = true;
                }
            }
            PrunePolicy::DegreeKeep => {
                let mut order: Vec<usize> = (0..edges.len()).collect();
                // edges are already in label-pair order, so a stable sort keeps the tie-break
                order.sort_by_key(|&i| {
                    let (u, v) = edges[i];
                    induced.degree(u) + induced.degree(v)
                });
                for &i in &order[..excess] {
                    remove[i] = true;
                }
            }
        }
        let mut i = 0;
        edges.retain(|_| {
            let keep = !remove[i];
            i += 1;
            keep
        });
        report.edges_removed = excess;
    }
    let pruned = Graph::from_sorted_parts(induced.labels().to_vec(), &edges);

    let non_isolated: Vec<usize> = (0..pruned.node_count())
        .filter(|&v| pruned.degree(v) > 0)
        .collect();
    report.isolated_removed = pruned.node_count() - non_isolated.len();
    let trimmed = pruned.induced_by_indices(&non_isolated);
    let final_graph = if trimmed.is_empty() {
        trimmed
    } else {
        report.components_dropped = trimmed.components().len() - 1;
        trimmed.largest_component()?
    };
    report.nodes_final = final_graph.node_count();
    report.edges_final = final_graph.edge_count();

    let pairs: Vec<(Label, Label)> = final_graph
        .labels()
        .iter()
        .enumerate()
        .map(|(i, original)| (Label::Int(i as u64), original.clone()))
        .collect();
    let compact_edges: Vec<(usize, usize)> = final_graph.edges().collect();
    let compact = Graph::from_sorted_parts(pairs.iter().map(|p| p.0.clone()).collect(), &compact_edges);

    Ok(SparsifiedGraph {
        graph: compact,
        node_map: NodeMap::new(pairs)?,
        quotas,
        selections,
        prune_report: report,
        sparsified: true,
    })
}

/// Sparsifies only when the graph exceeds both thresholds
/// (`|V| > n_v` and `|E| > n_e`); otherwise passes it through.
pub fn sparsify_if_large(
    g: &Graph,
    cs: &CommunityStructure,
    n_v: usize,
    n_e: usize,
    policy: PrunePolicy,
    rng_seed: u64,
) -> Result<SparsifiedGraph> {
    if g.node_count() > n_v && g.edge_count() > n_e {
        sparsify(g, cs, n_v, n_e, policy, rng_seed)
    } else {
        Ok(SparsifiedGraph::pass_through(g))
    }
}
