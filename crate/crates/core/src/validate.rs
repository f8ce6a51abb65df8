//! Feasibility checks on operator answers and the total repair that turns
//! any answer into a valid seed set.

use std::collections::{BTreeMap, HashSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fitness::SeedSet;
use crate::graph::{Graph, Label};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Check {
    /// Every proposed node exists.
    #[serde(rename = "T_I1")]
    InitValidNode,
    /// The proposal has exactly k nodes.
    #[serde(rename = "T_I2")]
    InitSize,
    /// No proposed node has below-median degree (soft).
    #[serde(rename = "T_I3")]
    InitLowDegree,
    #[serde(rename = "T_C1")]
    CrossoverSize,
    #[serde(rename = "T_C2")]
    CrossoverDuplicate,
    #[serde(rename = "T_C3")]
    CrossoverParentSource,
    /// The node to remove is in the current solution.
    #[serde(rename = "T_M1")]
    MutationPresence,
    /// The node to add exists.
    #[serde(rename = "T_M2")]
    MutationValidNode,
    /// The node to add is not already in the solution.
    #[serde(rename = "T_M3")]
    MutationRepeat,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::InitValidNode,
        Check::InitSize,
        Check::InitLowDegree,
        Check::CrossoverSize,
        Check::CrossoverDuplicate,
        Check::CrossoverParentSource,
        Check::MutationPresence,
        Check::MutationValidNode,
        Check::MutationRepeat,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            Check::InitValidNode => "T_I1",
            Check::InitSize => "T_I2",
            Check::InitLowDegree => "T_I3",
            Check::CrossoverSize => "T_C1",
            Check::CrossoverDuplicate => "T_C2",
            Check::CrossoverParentSource => "T_C3",
            Check::MutationPresence => "T_M1",
            Check::MutationValidNode => "T_M2",
            Check::MutationRepeat => "T_M3",
        }
    }

    pub fn from_code(code: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.code() == code)
    }

    pub fn is_soft(&self) -> bool {
        *self == Check::InitLowDegree
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub pass: u64,
    pub fail: u64,
}

impl Tally {
    pub fn total(&self) -> u64 {
        self.pass + self.fail
    }

    pub fn pass_rate(&self) -> Option<f64> {
        (self.total() > 0).then(|| self.pass as f64 / self.total() as f64)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: BTreeMap<Check, Tally>,
    pub repairs: Vec<String>,
}

impl ValidationReport {
    pub fn record(&mut self, check: Check, passed: bool) {
        let t = self.checks.entry(check).or_default();
        if passed {
            t.pass += 1;
        } else {
            t.fail += 1;
        }
    }

    pub fn tally(&self, check: Check) -> Tally {
        self.checks.get(&check).copied().unwrap_or_default()
    }

    pub fn failed(&self, check: Check) -> bool {
        self.tally(check).fail > 0
    }

    pub fn merge(&mut self, other: &ValidationReport) {
        for (c, t) in &other.checks {
            let e = self.checks.entry(*c).or_default();
            e.pass += t.pass;
            e.fail += t.fail;
        }
        self.repairs.extend(other.repairs.iter().cloned());
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strictness {
    #[default]
    Strict,
    Lax,
}

pub enum Candidate<'a> {
    Init(&'a [Label]),
    Crossover {
        labels: &'a [Label],
        parents: [&'a SeedSet; 2],
    },
    Mutation {
        remove: Option<&'a Label>,
        add: Option<&'a Label>,
        current: &'a SeedSet,
    },
}

/// Nodes by descending degree, ties by ascending index.
fn by_degree(g: &Graph, nodes: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = nodes.into_iter().collect();
    v.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));
    v
}

fn fill_to_k(g: &Graph, chosen: &mut Vec<usize>, k: usize, preferred: &[usize], report: &mut ValidationReport) {
    let k = k.min(g.node_count());
    if chosen.len() > k {
        report.repairs.push(format!("truncated {} -> {k}", chosen.len()));
        chosen.truncate(k);
    }
    let mut used: HashSet<usize> = chosen.iter().copied().collect();
    let everything = by_degree(g, 0..g.node_count());
    for &v in by_degree(g, preferred.iter().copied()).iter().chain(&everything) {
        if chosen.len() >= k {
            break;
        }
        if used.insert(v) {
            report.repairs.push(format!("filled with {}", g.label(v)));
            chosen.push(v);
        }
    }
}

fn random_fill<R: Rng>(g: &Graph, k: usize, rng: &mut R) -> Vec<usize> {
    let k = k.min(g.node_count());
    rand::seq::index::sample(rng, g.node_count(), k).into_vec()
}

fn resolve_unique(g: &Graph, labels: &[Label], report: &mut ValidationReport) -> Vec<usize> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for l in labels {
        match g.index_of(l) {
            Some(v) if seen.insert(v) => out.push(v),
            Some(_) => report.repairs.push(format!("dropped duplicate {l}")),
            None => report.repairs.push(format!("dropped unknown {l}")),
        }
    }
    out
}

/// Flags every applicable check and repairs the candidate into a valid
/// seed set of size `min(k, |V|)`.
pub fn validate_and_repair<R: Rng>(
    g: &Graph,
    k: usize,
    candidate: Candidate<'_>,
    strictness: Strictness,
    rng: &mut R,
) -> (SeedSet, ValidationReport) {
    let mut report = ValidationReport::default();
    let members = match candidate {
        Candidate::Init(labels) => {
            if labels.is_empty() {
                for c in [Check::InitValidNode, Check::InitSize, Check::InitLowDegree] {
                    report.record(c, false);
                }
                report.repairs.push("empty answer filled at random".into());
                random_fill(g, k, rng)
            } else {
                let median = g.median_degree();
                report.record(Check::InitValidNode, labels.iter().all(|l| g.index_of(l).is_some()));
                report.record(Check::InitSize, labels.len() == k);
                report.record(
                    Check::InitLowDegree,
                    labels
                        .iter()
                        .filter_map(|l| g.index_of(l))
                        .all(|v| g.degree(v) as f64 >= median),
                );
                let mut chosen = resolve_unique(g, labels, &mut report);
                fill_to_k(g, &mut chosen, k, &[], &mut report);
                chosen
            }
        }
        Candidate::Crossover { labels, parents } => {
            let union: Vec<usize> = {
                let mut u: Vec<usize> = parents[0].members().iter().chain(parents[1].members()).copied().collect();
                u.sort_unstable();
                u.dedup();
                u
            };
            if labels.is_empty() {
                for c in [Check::CrossoverSize, Check::CrossoverDuplicate, Check::CrossoverParentSource] {
                    report.record(c, false);
                }
                report.repairs.push("empty answer filled at random".into());
                random_fill(g, k, rng)
            } else {
                let in_union = |l: &Label| g.index_of(l).is_some_and(|v| union.binary_search(&v).is_ok());
                let distinct: HashSet<&Label> = labels.iter().collect();
                report.record(Check::CrossoverSize, labels.len() == k);
                report.record(Check::CrossoverDuplicate, distinct.len() == labels.len());
                report.record(Check::CrossoverParentSource, labels.iter().all(in_union));
                let mut chosen = resolve_unique(g, labels, &mut report);
                if strictness == Strictness::Strict {
                    let mut spare: Vec<usize> = by_degree(g, union.iter().copied())
                        .into_iter()
                        .filter(|v| !chosen.contains(v))
                        .collect();
                    spare.reverse();
                    let mut kept = Vec::with_capacity(chosen.len());
                    for v in chosen {
                        if union.binary_search(&v).is_ok() {
                            kept.push(v);
                        } else if let Some(r) = spare.pop() {
                            report.repairs.push(format!("replaced non-parent {} with {}", g.label(v), g.label(r)));
                            kept.push(r);
                        } else {
                            report.repairs.push(format!("dropped non-parent {}", g.label(v)));
                        }
                    }
                    chosen = kept;
                }
                fill_to_k(g, &mut chosen, k, &union, &mut report);
                chosen
            }
        }
        Candidate::Mutation { remove, add, current } => {
            let seeds = current.members();
            let remove_ix = remove.and_then(|l| g.index_of(l)).filter(|&v| current.contains(v));
            let add_ix = add.and_then(|l| g.index_of(l));
            report.record(Check::MutationPresence, remove_ix.is_some());
            report.record(Check::MutationValidNode, add_ix.is_some());
            report.record(Check::MutationRepeat, !add_ix.is_some_and(|v| current.contains(v)));
            if seeds.is_empty() || seeds.len() >= g.node_count() {
                return (current.clone(), report);
            }
            let out = match remove_ix {
                Some(v) => v,
                None => {
                    let v = *seeds.choose(rng).expect("non-empty");
                    report.repairs.push(format!("removal replaced by random seed {}", g.label(v)));
                    v
                }
            };
            let inn = match add_ix.filter(|&v| !current.contains(v)) {
                Some(v) => v,
                None => {
                    let v = by_degree(g, (0..g.node_count()).filter(|&v| !current.contains(v)))[0];
                    report.repairs.push(format!("addition replaced by {}", g.label(v)));
                    v
                }
            };
            seeds.iter().map(|&v| if v == out { inn } else { v }).collect()
        }
    };
    let set = SeedSet::new(g, members).expect("repair yields a valid seed set");
    (set, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list_str;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g() -> Graph {
        load_edge_list_str("0 1\n0 2\n0 3\n0 4\n1 2\n2 3\n4 5\n5 6").unwrap().0
    }

    fn ls(v: &[u64]) -> Vec<Label> {
        v.iter().map(|&x| Label::Int(x)).collect()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn clean_init_passes_everything() {
        let graph = g();
        let labels = ls(&[0, 2]);
        let (s, r) = validate_and_repair(&graph, 2, Candidate::Init(&labels), Strictness::Strict, &mut rng());
        assert_eq!(s.labels(&graph), labels);
        assert!(r.repairs.is_empty());
        for c in [Check::InitValidNode, Check::InitSize, Check::InitLowDegree] {
            assert_eq!(r.tally(c), Tally { pass: 1, fail: 0 });
        }
    }

    #[test]
    fn unknown_init_label_is_flagged_and_refilled() {
        let graph = g();
        let labels = ls(&[0, 99]);
        let (s, r) = validate_and_repair(&graph, 2, Candidate::Init(&labels), Strictness::Strict, &mut rng());
        assert!(r.failed(Check::InitValidNode));
        assert!(!r.failed(Check::InitSize));
        // refilled with the highest-degree unused node
        assert_eq!(s.labels(&graph), ls(&[0, 2]));
    }

    #[test]
    fn empty_answers_flag_all_phase_checks() {
        let graph = g();
        let (s, r) = validate_and_repair(&graph, 3, Candidate::Init(&[]), Strictness::Strict, &mut rng());
        assert_eq!(s.k(), 3);
        assert!(r.failed(Check::InitValidNode) && r.failed(Check::InitSize) && r.failed(Check::InitLowDegree));
    }

    #[test]
    fn strict_crossover_replaces_outsiders() {
        let graph = g();
        let a = SeedSet::from_labels(&graph, &ls(&[1, 2])).unwrap();
        let b = SeedSet::from_labels(&graph, &ls(&[2, 3])).unwrap();
        let labels = ls(&[2, 6]);
        let cand = || Candidate::Crossover { labels: &labels, parents: [&a, &b] };
        let (s, r) = validate_and_repair(&graph, 2, cand(), Strictness::Strict, &mut rng());
        assert!(r.failed(Check::CrossoverParentSource));
        assert!(s.members().iter().all(|v| a.contains(*v) || b.contains(*v)));
        let (s, r) = validate_and_repair(&graph, 2, cand(), Strictness::Lax, &mut rng());
        assert!(r.failed(Check::CrossoverParentSource));
        assert_eq!(s.labels(&graph), ls(&[2, 6]));
    }

    #[test]
    fn crossover_duplicates_are_flagged() {
        let graph = g();
        let a = SeedSet::from_labels(&graph, &ls(&[1, 2])).unwrap();
        let labels = ls(&[1, 1]);
        let (s, r) = validate_and_repair(
            &graph,
            2,
            Candidate::Crossover { labels: &labels, parents: [&a, &a] },
            Strictness::Strict,
            &mut rng(),
        );
        assert!(r.failed(Check::CrossoverDuplicate));
        assert!(!r.failed(Check::CrossoverSize));
        assert_eq!(s.labels(&graph), ls(&[1, 2]));
    }

    #[test]
    fn repeated_addition_is_replaced() {
        let graph = g();
        let cur = SeedSet::from_labels(&graph, &ls(&[0, 6])).unwrap();
        let (rm, add) = (Label::Int(6), Label::Int(0));
        let (s, r) = validate_and_repair(
            &graph,
            2,
            Candidate::Mutation { remove: Some(&rm), add: Some(&add), current: &cur },
            Strictness::Strict,
            &mut rng(),
        );
        assert!(r.failed(Check::MutationRepeat));
        assert!(!r.failed(Check::MutationPresence) && !r.failed(Check::MutationValidNode));
        // node 2 has the highest degree among non-seeds
        assert_eq!(s.labels(&graph), ls(&[0, 2]));
    }

    #[test]
    fn codes_round_trip() {
        for c in Check::ALL {
            assert_eq!(Check::from_code(c.code()), Some(c));
        }
    }
}
