//! Seed sets and the fitness functions evaluated on them.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{components_excluding, Graph, Label};

/// Default propagation probability. The value behind the published fitness
/// tables is not stated; 0.05 is a conventional small probability.
pub const DEFAULT_PROPAGATION: f64 = 0.05;

/// A duplicate-free set of node indices into one graph, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeedSet {
    members: Vec<usize>,
}

impl SeedSet {
    pub fn new(g: &Graph, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        if let Some(&bad) = members.iter().find(|&&v| v >= g.node_count()) {
            return Err(Error::invalid(format!("node index {bad} out of range")));
        }
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("seed set contains duplicates"));
        }
        Ok(SeedSet { members })
    }

    pub fn from_labels(g: &Graph, labels: &[Label]) -> Result<Self> {
        let members = labels.iter().map(|l| g.require(l)).collect::<Result<Vec<_>>>()?;
        Self::new(g, members)
    }

    pub fn empty() -> Self {
        SeedSet { members: Vec::new() }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn labels(&self, g: &Graph) -> Vec<Label> {
        self.members.iter().map(|&v| g.label(v).clone()).collect()
    }

    fn check(&self, g: &Graph) -> Result<()> {
        match self.members.last() {
            Some(&v) if v >= g.node_count() => {
                Err(Error::invalid(format!("seed index {v} not in graph")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Edv,
    IcSpread,
    Dismantling,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessValue {
    pub value: f64,
    pub objective: ObjectiveKind,
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("probability {p} outside [0, 1]")))
    }
}

/// Expected diffusion value: `k + Σ_{b ∈ N(S)∖S} (1 − (1−p)^δ(b))`, where
/// `δ(b)` is the number of edges from `b` into `S`.
pub fn edv(g: &Graph, s: &SeedSet, p: f64) -> Result<FitnessValue> {
    s.check(g)?;
    check_probability(p)?;
    let mut hits = vec![0u32; g.node_count()];
    for &v in s.members() {
        for &w in g.neighbors(v) {
            hits[w] += 1;
        }
    }
    let q = 1.0 - p;
    let mut value = s.k() as f64;
    for (b, &h) in hits.iter().enumerate() {
        if h > 0 && !s.contains(b) {
            value += 1.0 - q.powi(h as i32);
        }
    }
    Ok(FitnessValue {
        value,
        objective: ObjectiveKind::Edv,
    })
}

/// Mean activated-node count over `trials` independent-cascade runs.
pub fn ic_simulate(g: &Graph, s: &SeedSet, p: f64, trials: usize, rng_seed: u64) -> Result<FitnessValue> {
    s.check(g)?;
    check_probability(p)?;
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = g.node_count();
    let mut active = vec![u32::MAX; n];
    let mut frontier = Vec::new();
    let mut next = Vec::new();
    let mut total = 0usize;
    for trial in 0..trials as u32 {
        frontier.clear();
        for &v in s.members() {
            active[v] = trial;
            frontier.push(v);
        }
        let mut count = frontier.len();
        while !frontier.is_empty() {
            next.clear();
            for &v in &frontier {
                for &w in g.neighbors(v) {
                    if active[w] != trial && rng.random::<f64>() < p {
                        active[w] = trial;
                        next.push(w);
                    }
                }
            }
            count += next.len();
            std::mem::swap(&mut frontier, &mut next);
        }
        total += count;
    }
    Ok(FitnessValue {
        value: total as f64 / trials as f64,
        objective: ObjectiveKind::IcSpread,
    })
}

/// `|V| − |LCC(G ∖ S)|`; `|V|` when nothing remains.
pub fn dismantling_fitness(g: &Graph, s: &SeedSet) -> Result<FitnessValue> {
    s.check(g)?;
    let largest = components_excluding(g, s.members())
        .iter()
        .map(Vec::len)
        .max()
        .unwrap_or(0);
    Ok(FitnessValue {
        value: (g.node_count() - largest) as f64,
        objective: ObjectiveKind::Dismantling,
    })
}

/// The objective optimized by the engine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    Edv { p: f64 },
    Dismantling,
}

impl Objective {
    pub fn kind(&self) -> ObjectiveKind {
        match self {
            Objective::Edv { .. } => ObjectiveKind::Edv,
            Objective::Dismantling => ObjectiveKind::Dismantling,
        }
    }

    pub fn evaluate(&self, g: &Graph, s: &SeedSet) -> Result<f64> {
        Ok(match *self {
            Objective::Edv { p } => edv(g, s, p)?.value,
            Objective::Dismantling => dismantling_fitness(g, s)?.value,
        })
    }
}

type CacheKey = (Vec<Label>, ObjectiveKind, u64);

/// Memoizing evaluator keyed on sorted member labels, objective and `p`.
pub struct FitnessCache<'g> {
    graph: &'g Graph,
    objective: Objective,
    entries: Mutex<HashMap<CacheKey, f64>>,
}

impl<'g> FitnessCache<'g> {
    pub fn new(graph: &'g Graph, objective: Objective) -> Self {
        FitnessCache {
            graph,
            objective,
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn evaluate(&self, s: &SeedSet) -> Result<f64> {
        let p_bits = match self.objective {
            Objective::Edv { p } => p.to_bits(),
            Objective::Dismantling => 0,
        };
        let key = (s.labels(self.graph), self.objective.kind(), p_bits);
        if let Some(&v) = self.entries.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let value = self.objective.evaluate(self.graph, s)?;
        self.entries.lock().expect("cache lock").insert(key, value);
        Ok(value)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list_str;

    fn g(text: &str) -> Graph {
        load_edge_list_str(text).unwrap().0
    }

    fn seeds(graph: &Graph, labels: &[u64]) -> SeedSet {
        let labels: Vec<Label> = labels.iter().map(|&v| Label::Int(v)).collect();
        SeedSet::from_labels(graph, &labels).unwrap()
    }

    #[test]
    fn edv_all_nodes_is_node_count() {
        let graph = g("0 1\n1 2\n2 3\n3 0\n0 2");
        let all = seeds(&graph, &[0, 1, 2, 3]);
        for p in [0.0, 0.05, 0.7, 1.0] {
            assert_eq!(edv(&graph, &all, p).unwrap().value, 4.0);
        }
    }

    #[test]
    fn edv_star_center() {
        let star = g("0 1\n0 2\n0 3\n0 4");
        let v = edv(&star, &seeds(&star, &[0]), 0.1).unwrap().value;
        assert!((v - 1.4).abs() < 1e-12);
    }

    #[test]
    fn edv_counts_only_one_hop_neighbors() {
        let graph = g("0 1\n0 2\n1 2\n2 3");
        let v = edv(&graph, &seeds(&graph, &[0, 1]), 0.5).unwrap().value;
        assert!((v - 2.75).abs() < 1e-12);
    }

    #[test]
    fn unknown_seed_label_is_named() {
        let graph = g("0 1");
        let err = SeedSet::from_labels(&graph, &[Label::Int(7)]).unwrap_err();
        assert!(err.to_string().contains('7'));
    }

    #[test]
    fn ic_extreme_probabilities() {
        let graph = g("0 1\n1 2\n2 3\n3 4\n1 4");
        let s = seeds(&graph, &[0, 3]);
        assert_eq!(ic_simulate(&graph, &s, 0.0, 50, 1).unwrap().value, 2.0);
        assert_eq!(ic_simulate(&graph, &s, 1.0, 50, 1).unwrap().value, 5.0);
    }

    #[test]
    fn ic_is_reproducible() {
        let graph = g("0 1\n1 2\n2 3\n3 4\n1 4\n0 4");
        let s = seeds(&graph, &[0]);
        let a = ic_simulate(&graph, &s, 0.4, 1000, 9).unwrap().value;
        let b = ic_simulate(&graph, &s, 0.4, 1000, 9).unwrap().value;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn ic_path_matches_exact_expectation() {
        let path = g("0 1\n1 2");
        let s = seeds(&path, &[0]);
        let trials = 100_000;
        let mean = ic_simulate(&path, &s, 0.5, trials, 3).unwrap().value;
        // outcomes 1, 2, 3 with probabilities 1/2, 1/4, 1/4
        let exact = 1.75;
        let var = 0.5 * 1.0 + 0.25 * 4.0 + 0.25 * 9.0 - exact * exact;
        let sigma = (var / trials as f64).sqrt();
        assert!((mean - exact).abs() <= 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn dismantling_cases() {
        let path = g("0 1\n1 2");
        assert_eq!(dismantling_fitness(&path, &seeds(&path, &[1])).unwrap().value, 2.0);
        assert_eq!(dismantling_fitness(&path, &SeedSet::empty()).unwrap().value, 0.0);
        assert_eq!(dismantling_fitness(&path, &seeds(&path, &[0, 1, 2])).unwrap().value, 3.0);
    }

    #[test]
    fn probability_out_of_range_is_rejected() {
        let graph = g("0 1");
        assert!(edv(&graph, &seeds(&graph, &[0]), 1.5).is_err());
    }

    #[test]
    fn cache_reuses_entries() {
        let graph = g("0 1\n1 2\n2 3");
        let cache = FitnessCache::new(&graph, Objective::Edv { p: 0.1 });
        let s = seeds(&graph, &[1, 2]);
        let a = cache.evaluate(&s).unwrap();
        let b = cache.evaluate(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.len(), 1);
    }
}
