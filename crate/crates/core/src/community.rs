//! Community detection (greedy modularity agglomeration) and the size-driven
//! merging passes applied before sparsification.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{Graph, Label};

/// A partition of a graph's node indices into non-empty communities.
///
/// Communities are kept in canonical order (by smallest member), and each
/// community's members are sorted, so the index of a community is stable for
/// a given partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommunityStructure {
    communities: Vec<Vec<usize>>,
    assignment: Vec<usize>,
}

impl CommunityStructure {
    /// Validates that `sets` partition `0..node_count`.
    pub fn from_sets(node_count: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; node_count];
        for set in &sets {
            if set.is_empty() {
                return Err(Error::invalid("empty community"));
            }
            for &v in set {
                if v >= node_count {
                    return Err(Error::invalid(format!("node index {v} out of range")));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::invalid(format!("node index {v} in two communities")));
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("node index {v} not covered")));
        }
        Ok(Self::canonical(node_count, sets))
    }

    /// Builds from a per-node community id (ids need not be contiguous).
    pub fn from_assignment(assignment: &[usize]) -> Self {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &c) in assignment.iter().enumerate() {
            groups.entry(c).or_default().push(v);
        }
        Self::canonical(assignment.len(), groups.into_values().collect())
    }

    pub fn singletons(node_count: usize) -> Self {
        Self::canonical(node_count, (0..node_count).map(|v| vec![v]).collect())
    }

    fn canonical(node_count: usize, mut sets: Vec<Vec<usize>>) -> Self {
        for s in &mut sets {
            s.sort_unstable();
        }
        sets.sort_by_key(|s| s[0]);
        let mut assignment = vec![0; node_count];
        for (c, set) in sets.iter().enumerate() {
            for &v in set {
                assignment[v] = c;
            }
        }
        CommunityStructure {
            communities: sets,
            assignment,
        }
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn communities(&self) -> &[Vec<usize>] {
        &self.communities
    }

    pub fn community_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.communities.iter().map(Vec::len).collect()
    }

    /// Number of edges between community `c` and every community, indexed by
    /// community. The entry for `c` itself counts internal edge endpoints and
    /// is not meaningful.
    pub fn edge_counts_from(&self, g: &Graph, c: usize) -> Vec<usize> {
        let mut counts = vec![0; self.len()];
        for &v in &self.communities[c] {
            for &w in g.neighbors(v) {
                counts[self.assignment[w]] += 1;
            }
        }
        counts
    }

    fn merged(&self, from: usize, into: usize) -> Self {
        let mut sets = self.communities.clone();
        let moved = std::mem::take(&mut sets[from]);
        sets[into].extend(moved);
        sets.remove(from);
        Self::canonical(self.node_count(), sets)
    }

    /// Writes `label community_index` lines.
    pub fn write<W: Write>(&self, g: &Graph, mut w: W) -> std::io::Result<()> {
        for v in 0..self.node_count() {
            writeln!(w, "{} {}", g.label(v), self.assignment[v])?;
        }
        Ok(())
    }

    /// Reads the two-column format produced by [`CommunityStructure::write`].
    pub fn read<R: BufRead>(g: &Graph, source: R) -> Result<Self> {
        let mut assignment = vec![usize::MAX; g.node_count()];
        for (i, line) in source.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let mut tokens = line.split_whitespace();
            let (Some(label), Some(comm), None) = (tokens.next(), tokens.next(), tokens.next())
            else {
                return Err(parse_err("expected `label community`".into()));
            };
            let v = g.require(&Label::parse(label))?;
            assignment[v] = comm
                .parse()
                .map_err(|_| parse_err(format!("bad community index `{comm}`")))?;
        }
        if let Some(v) = assignment.iter().position(|&c| c == usize::MAX) {
            return Err(Error::invalid(format!(
                "node `{}` has no community",
                g.label(v)
            )));
        }
        Ok(Self::from_assignment(&assignment))
    }
}

/// Newman modularity of a partition.
pub fn modularity(g: &Graph, cs: &CommunityStructure) -> Result<f64> {
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::invalid("modularity is undefined without edges"));
    }
    if cs.node_count() != g.node_count() {
        return Err(Error::invalid("partition does not match graph"));
    }
    let m = m as f64;
    let mut q = 0.0;
    for c in 0..cs.len() {
        let mut internal_ends = 0usize;
        let mut degree = 0usize;
        for &v in &cs.communities[c] {
            degree += g.degree(v);
            internal_ends += g
                .neighbors(v)
                .iter()
                .filter(|&&w| cs.assignment[w] == c)
                .count();
        }
        let internal = internal_ends as f64 / 2.0;
        q += internal / m - (degree as f64 / (2.0 * m)).powi(2);
    }
    Ok(q)
}

/// Greedy agglomerative modularity maximization (Clauset-Newman-Moore).
///
/// Starts from singletons and repeatedly merges the adjacent pair with the
/// largest modularity gain, then cuts the merge sequence at its modularity
/// peak. Gains are compared in exact integer arithmetic; ties go to the
/// lexicographically smallest community pair. Communities in different
/// components are never merged.
pub fn detect_fastgreedy(g: &Graph) -> CommunityStructure {
    let n = g.node_count();
    let m = g.edge_count() as i128;
    if m == 0 {
        return CommunityStructure::singletons(n);
    }
    // ΔQ·2m² = 2m·e_ij − d_i·d_j with e_ij an edge count and d a degree sum.
    let gain = |e: i128, di: i128, dj: i128| 2 * m * e - di * dj;

    let mut degree: Vec<i128> = (0..n).map(|v| g.degree(v) as i128).collect();
    let mut links: Vec<BTreeMap<usize, i128>> = (0..n)
        .map(|v| g.neighbors(v).iter().map(|&w| (w, 1)).collect())
        .collect();
    let mut alive = vec![true; n];

    // per-community best (gain, lo, hi) over its links
    let best_of = |c: usize, links: &[BTreeMap<usize, i128>], degree: &[i128]| {
        links[c]
            .iter()
            .map(|(&o, &e)| (gain(e, degree[c], degree[o]), c.min(o), c.max(o)))
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2)))
    };
    let mut best: Vec<Option<(i128, usize, usize)>> =
        (0..n).map(|c| best_of(c, &links, &degree)).collect();

    // 4m²·Q, exact
    let mut q: i128 = -(0..n).map(|v| degree[v] * degree[v]).sum::<i128>();
    let mut merges = Vec::new();
    let mut peak = (q, 0usize);

    loop {
        let top = (0..n)
            .filter(|&c| alive[c])
            .filter_map(|c| best[c])
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2)));
        let Some((dq, keep, gone)) = top else { break };

        alive[gone] = false;
        let gone_links = std::mem::take(&mut links[gone]);
        links[keep].remove(&gone);
        for (&o, &e) in &gone_links {
            if o == keep {
                continue;
            }
            *links[keep].entry(o).or_insert(0) += e;
            let entry = links[o].remove(&gone).unwrap_or(0);
            *links[o].entry(keep).or_insert(0) += entry;
        }
        degree[keep] += degree[gone];
        best[gone] = None;

        q += 2 * dq;
        merges.push((keep, gone));
        if q > peak.0 {
            peak = (q, merges.len());
        }

        let touched: Vec<usize> = links[keep].keys().copied().collect();
        best[keep] = best_of(keep, &links, &degree);
        for o in touched {
            best[o] = best_of(o, &links, &degree);
        }
    }

    let mut owner: Vec<usize> = (0..n).collect();
    fn find(owner: &mut [usize], mut v: usize) -> usize {
        while owner[v] != v {
            owner[v] = owner[owner[v]];
            v = owner[v];
        }
        v
    }
    for &(keep, gone) in &merges[..peak.1] {
        let (a, b) = (find(&mut owner, keep), find(&mut owner, gone));
        owner[b] = a;
    }
    let assignment: Vec<usize> = (0..n).map(|v| find(&mut owner, v)).collect();
    CommunityStructure::from_assignment(&assignment)
}

/// Target community for merging `c`: the candidate with the most edges to
/// `c`, ties by smallest member; when `c` has no edges to any candidate, the
/// smallest candidate (again ties by smallest member).
fn merge_target(g: &Graph, cs: &CommunityStructure, c: usize, candidates: &[usize]) -> usize {
    let counts = cs.edge_counts_from(g, c);
    // candidates arrive in canonical order, so strict comparisons keep the
    // smallest-member tie-break
    let mut best = candidates[0];
    for &k in candidates {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    if counts[best] > 0 {
        return best;
    }
    let mut smallest = candidates[0];
    for &k in candidates {
        if cs.communities[k].len() < cs.communities[smallest].len() {
            smallest = k;
        }
    }
    smallest
}

/// Smallest community among `pool`, ties by smallest member.
fn smallest_of(cs: &CommunityStructure, pool: impl Iterator<Item = usize>) -> Option<usize> {
    pool.min_by_key(|&c| (cs.communities[c].len(), cs.communities[c][0]))
}

/// Repeatedly folds the smallest community into its best-connected neighbor
/// until exactly `n_target` communities remain.
pub fn merge_to_target(
    g: &Graph,
    cs: &CommunityStructure,
    n_target: usize,
) -> Result<CommunityStructure> {
    if n_target == 0 {
        return Err(Error::invalid("target community count must be at least 1"));
    }
    if n_target > cs.len() {
        return Err(Error::invalid(format!(
            "target {n_target} exceeds current community count {}",
            cs.len()
        )));
    }
    let mut cs = cs.clone();
    while cs.len() > n_target {
        let small = smallest_of(&cs, 0..cs.len()).expect("non-empty");
        let others: Vec<usize> = (0..cs.len()).filter(|&k| k != small).collect();
        let target = merge_target(g, &cs, small, &others);
        cs = cs.merged(small, target);
    }
    Ok(cs)
}

/// Merges every community smaller than `fraction · |V|` into its
/// best-connected community among those meeting the threshold, smallest
/// first. If no community meets the threshold the partition is returned
/// unchanged.
pub fn merge_small(g: &Graph, cs: &CommunityStructure, fraction: f64) -> CommunityStructure {
    let threshold = fraction * cs.node_count() as f64;
    let undersized = |cs: &CommunityStructure, c: usize| (cs.communities[c].len() as f64) < threshold;
    let mut cs = cs.clone();
    loop {
        let large: Vec<usize> = (0..cs.len()).filter(|&c| !undersized(&cs, c)).collect();
        if large.is_empty() {
            break;
        }
        let Some(small) = smallest_of(&cs, (0..cs.len()).filter(|&c| undersized(&cs, c))) else {
            break;
        };
        let target = merge_target(g, &cs, small, &large);
        cs = cs.merged(small, target);
    }
    cs
}
