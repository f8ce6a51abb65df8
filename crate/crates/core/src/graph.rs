//! Undirected simple graphs with stable node labels.
//!
//! Nodes are stored with a dense internal index assigned in ascending label
//! order, so "ties broken by ascending label" and "ties broken by ascending
//! index" are the same thing everywhere downstream.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A node label as read from input: a non-negative integer or an opaque name.
///
/// Integers order numerically and sort before names.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Int(u64),
    Name(String),
}

impl Label {
    /// Parses a token. Only canonical decimal integers (no sign, no leading
    /// zeros) become `Int`, so `Display` reproduces the token exactly.
    pub fn parse(token: &str) -> Label {
        let canonical = !token.is_empty()
            && token.bytes().all(|b| b.is_ascii_digit())
            && (token == "0" || !token.starts_with('0'));
        match token.parse::<u64>() {
            Ok(v) if canonical => Label::Int(v),
            _ => Label::Name(token.to_string()),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Int(v) => write!(f, "{v}"),
            Label::Name(s) => f.write_str(s),
        }
    }
}

impl From<u64> for Label {
    fn from(v: u64) -> Self {
        Label::Int(v)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::parse(s)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Label::Int(v) => s.serialize_u64(*v),
            Label::Name(n) => s.serialize_str(n),
        }
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Int(v) => Label::Int(v),
            Raw::Str(s) => Label::parse(&s),
        })
    }
}

/// Counts gathered while loading an edge list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub lines: usize,
    pub edges: usize,
    pub duplicates: usize,
    pub self_loops: usize,
}

/// Immutable undirected simple graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    labels: Vec<Label>,
    index: HashMap<Label, usize>,
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from nodes and edges given by label. Endpoints of edges
    /// are added as nodes implicitly. Self-loops and duplicates are dropped.
    pub fn from_labeled<N, E>(nodes: N, edges: E) -> Graph
    where
        N: IntoIterator<Item = Label>,
        E: IntoIterator<Item = (Label, Label)>,
    {
        Self::build(nodes, edges).0
    }

    fn build<N, E>(nodes: N, edges: E) -> (Graph, LoadReport)
    where
        N: IntoIterator<Item = Label>,
        E: IntoIterator<Item = (Label, Label)>,
    {
        let edges: Vec<(Label, Label)> = edges.into_iter().collect();
        let mut labels: Vec<Label> = nodes.into_iter().collect();
        for (u, v) in &edges {
            labels.push(u.clone());
            labels.push(v.clone());
        }
        labels.sort();
        labels.dedup();
        let index: HashMap<Label, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();

        let mut report = LoadReport::default();
        let mut pairs = Vec::with_capacity(edges.len());
        for (u, v) in &edges {
            let (a, b) = (index[u], index[v]);
            if a == b {
                report.self_loops += 1;
                continue;
            }
            pairs.push((a.min(b), a.max(b)));
        }
        let before = pairs.len();
        pairs.sort_unstable();
        pairs.dedup();
        report.duplicates = before - pairs.len();
        report.edges = pairs.len();

        let mut adj = vec![Vec::new(); labels.len()];
        for &(a, b) in &pairs {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let graph = Graph {
            labels,
            index,
            adj,
            edge_count: pairs.len(),
        };
        (graph, report)
    }

    /// Builds a graph over `labels` (which must be strictly ascending) from
    /// index pairs into that list.
    pub(crate) fn from_sorted_parts(labels: Vec<Label>, edges: &[(usize, usize)]) -> Graph {
        debug_assert!(labels.windows(2).all(|w| w[0] < w[1]));
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        let mut adj = vec![Vec::new(); labels.len()];
        for &(a, b) in edges {
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut count = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            count += list.len();
        }
        Graph {
            labels,
            index,
            adj,
            edge_count: count / 2,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: usize) -> &Label {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Resolves a label or reports it as unknown.
    pub fn require(&self, label: &Label) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::UnknownNode(label.clone()))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Median of the degree sequence (mean of the two middle values when the
    /// node count is even). Zero for an empty graph.
    pub fn median_degree(&self) -> f64 {
        let mut d = self.degrees();
        if d.is_empty() {
            return 0.0;
        }
        d.sort_unstable();
        let n = d.len();
        if n % 2 == 1 {
            d[n / 2] as f64
        } else {
            (d[n / 2 - 1] + d[n / 2]) as f64 / 2.0
        }
    }

    /// Hop distances from `src`; `usize::MAX` marks unreachable nodes.
    pub fn bfs_distances(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.node_count()];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        components_excluding(self, &[])
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() <= 1 || self.bfs_distances(0).iter().all(|&d| d != usize::MAX)
    }

    /// Subgraph induced by node indices. Duplicates in `keep` are ignored.
    pub fn induced_by_indices(&self, keep: &[usize]) -> Graph {
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut position = vec![usize::MAX; self.node_count()];
        for (i, &v) in keep.iter().enumerate() {
            position[v] = i;
        }
        let mut edges = Vec::new();
        for (i, &v) in keep.iter().enumerate() {
            for &w in &self.adj[v] {
                let j = position[w];
                if j != usize::MAX && j > i {
                    edges.push((i, j));
                }
            }
        }
        let labels = keep.iter().map(|&v| self.labels[v].clone()).collect();
        Graph::from_sorted_parts(labels, &edges)
    }

    /// Subgraph on the given labels with exactly the edges between them.
    pub fn induced_subgraph<'a, I>(&self, keep: I) -> Result<Graph>
    where
        I: IntoIterator<Item = &'a Label>,
    {
        let idx = keep
            .into_iter()
            .map(|l| self.require(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.induced_by_indices(&idx))
    }

    /// Induced subgraph on the largest connected component. Ties go to the
    /// component containing the smallest label.
    pub fn largest_component(&self) -> Result<Graph> {
        if self.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let comps = self.components();
        // components() is ordered by smallest member, so the first maximum wins ties
        let best = comps
            .iter()
            .fold(&comps[0], |best, c| if c.len() > best.len() { c } else { best });
        Ok(self.induced_by_indices(best))
    }

    /// Writes the graph in edge-list form. Isolated nodes are written as a
    /// self-pair line (`v v`), which the loader reads back as a bare node.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in 0..self.node_count() {
            if self.adj[v].is_empty() {
                writeln!(w, "{} {}", self.labels[v], self.labels[v])?;
            }
        }
        for (u, v) in self.edges() {
            writeln!(w, "{} {}", self.labels[u], self.labels[v])?;
        }
        Ok(())
    }

    pub fn to_edge_list_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("labels are utf-8")
    }
}

/// Components of the graph after deleting `removed` nodes, ordered by
/// smallest member.
pub(crate) fn components_excluding(g: &Graph, removed: &[usize]) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    for &r in removed {
        seen[r] = true;
    }
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        queue.push_back(s);
        let mut comp = Vec::new();
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for &w in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Reads a whitespace-separated edge list. Lines starting with `#` and blank
/// lines are skipped. Self-loops and duplicate edges are dropped and counted;
/// the endpoint of a self-loop is still kept as a node.
pub fn load_edge_list<R: BufRead>(source: R) -> Result<(Graph, LoadReport)> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut lines = 0;
    for (i, line) in source.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 2 tokens, found {}", tokens.len()),
            });
        }
        lines += 1;
        let (u, v) = (Label::parse(tokens[0]), Label::parse(tokens[1]));
        if u == v {
            nodes.push(u.clone());
        }
        edges.push((u, v));
    }
    if lines == 0 {
        return Err(Error::EmptyGraph);
    }
    let (graph, mut report) = Graph::build(nodes, edges);
    report.lines = lines;
    Ok((graph, report))
}

pub fn load_edge_list_str(text: &str) -> Result<(Graph, LoadReport)> {
    load_edge_list(text.as_bytes())
}

pub fn load_edge_list_file(path: &std::path::Path) -> Result<(Graph, LoadReport)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_edge_list(std::io::BufReader::new(file))
}

/// Exact unnormalized betweenness (Brandes). Each unordered pair of
/// endpoints contributes once, so a path `A-B-C` gives `b(B) = 1`.
pub fn betweenness(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut centrality = vec![0.0f64; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        stack.clear();
        for v in 0..n {
            preds[v].clear();
            sigma[v] = 0.0;
            dist[v] = usize::MAX;
            delta[v] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    // every unordered pair was accumulated from both endpoints
    for c in &mut centrality {
        *c /= 2.0;
    }
    centrality
}

/// Node indices ranked by a score, highest first, ties by ascending index.
pub fn rank_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(text: &str) -> Graph {
        load_edge_list_str(text).unwrap().0
    }

    #[test]
    fn loads_simple_edge_list() {
        let graph = g("0 1\n1 2");
        assert_eq!(graph.node_count(), 3);
        assert_eq!(graph.edge_count(), 2);
    }

    #[test]
    fn dedups_and_drops_self_loops() {
        let (graph, report) = load_edge_list_str("0 1\n1 0\n0 0").unwrap();
        assert_eq!(graph.node_count(), 2);
        assert_eq!(graph.edge_count(), 1);
        assert_eq!(report.duplicates, 1);
        assert_eq!(report.self_loops, 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load_edge_list_str("# header\n0 1\n1 2 3\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(load_edge_list_str(""), Err(Error::EmptyGraph)));
        assert!(matches!(
            load_edge_list_str("# only comments\n\n"),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn labels_order_numerically_then_by_name() {
        let graph = g("10 2\n2 b\nb a");
        let labels: Vec<String> = graph.labels().iter().map(|l| l.to_string()).collect();
        assert_eq!(labels, ["2", "10", "a", "b"]);
        assert_eq!(Label::parse("007"), Label::Name("007".into()));
    }

    #[test]
    fn betweenness_path_and_star() {
        let path = g("A B\nB C");
        let b = betweenness(&path);
        assert_eq!(b, vec![0.0, 1.0, 0.0]);

        let star = g("0 1\n0 2\n0 3\n0 4");
        let b = betweenness(&star);
        assert_eq!(b[0], 6.0);
        assert!(b[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn betweenness_isolated_node_is_zero() {
        let graph = g("0 1\n1 2\n5 5");
        assert_eq!(betweenness(&graph), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn largest_component_cases() {
        let two = g("0 1\n1 2\n2 3\n3 4\n10 11\n11 12");
        let lcc = two.largest_component().unwrap();
        assert_eq!(lcc.node_count(), 5);

        let connected = g("0 1\n1 2");
        assert_eq!(connected.largest_component().unwrap(), connected);

        let tie = g("7 8\n8 9\n9 10\n2 3\n3 4\n4 5");
        let lcc = tie.largest_component().unwrap();
        assert!(lcc.index_of(&Label::Int(2)).is_some());
        assert!(lcc.index_of(&Label::Int(7)).is_none());
    }

    #[test]
    fn induced_subgraph_cases() {
        let tri = g("0 1\n1 2\n0 2");
        let sub = tri.induced_subgraph(&[Label::Int(0), Label::Int(1)]).unwrap();
        assert_eq!(sub.edge_count(), 1);
        assert_eq!(tri.induced_subgraph(tri.labels()).unwrap(), tri);

        let iso = g("0 1\n5 5");
        let sub = iso.induced_subgraph(&[Label::Int(5)]).unwrap();
        assert_eq!((sub.node_count(), sub.edge_count()), (1, 0));

        let err = tri.induced_subgraph(&[Label::Int(9)]).unwrap_err();
        assert!(err.to_string().contains('9'));
    }

    #[test]
    fn edge_list_round_trip_keeps_isolated_nodes() {
        let graph = g("0 1\n1 2\n9 9\nx y");
        let again = g(&graph.to_edge_list_string());
        assert_eq!(graph, again);
    }

    #[test]
    fn median_degree_even_and_odd() {
        assert_eq!(g("0 1\n1 2").median_degree(), 1.0);
        assert_eq!(g("0 1\n1 2\n2 3").median_degree(), 1.5);
    }
}
