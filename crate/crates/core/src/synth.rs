//! Seeded synthetic graphs for tests, benches and demos. Node labels are
//! the integers `0..n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, Label};

fn build(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_labeled(
        (0..n as u64).map(Label::Int),
        edges.iter().map(|&(u, v)| (Label::Int(u as u64), Label::Int(v as u64))),
    )
}

/// Preferential attachment: each new node links to `m` distinct existing
/// nodes chosen proportionally to degree. Starts from a clique on `m + 1`.
pub fn barabasi_albert(n: usize, m: usize, seed: u64) -> Graph {
    let m = m.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = (m + 1).min(n);
    let mut edges = Vec::new();
    let mut ends: Vec<usize> = Vec::new();
    for u in 0..start {
        for v in (u + 1)..start {
            edges.push((u, v));
            ends.extend([u, v]);
        }
    }
    for v in start..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m.min(v) {
            let t = if ends.is_empty() {
                rng.random_range(0..v)
            } else {
                ends[rng.random_range(0..ends.len())]
            };
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((t, v));
            ends.extend([t, v]);
        }
    }
    build(n, &edges)
}

/// Block model: nodes in block `i` are consecutive; pairs inside a block
/// connect with `p_in`, across blocks with `p_out`. Each block also gets a
/// spanning path so blocks are internally connected.
pub fn planted_partition(sizes: &[usize], p_in: f64, p_out: f64, seed: u64) -> (Graph, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(i, &s)| std::iter::repeat_n(i, s))
        .collect();
    let n = block.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let linked = if block[u] == block[v] {
                v == u + 1 || rng.random_bool(p_in)
            } else {
                rng.random_bool(p_out)
            };
            if linked {
                edges.push((u, v));
            }
        }
    }
    (build(n, &edges), block)
}

/// Two internally connected clusters of `cluster_size` nodes with no direct
/// edges between them, joined only through `bridges` extra nodes. Each bridge
/// links to `links` nodes on each side. Returns the bridge labels too.
pub fn two_clusters_with_bridges(
    cluster_size: usize,
    p_in: f64,
    bridges: usize,
    links: usize,
    seed: u64,
) -> (Graph, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for side in 0..2 {
        let base = side * cluster_size;
        for i in 0..cluster_size {
            for j in (i + 1)..cluster_size {
                if j == i + 1 || rng.random_bool(p_in) {
                    edges.push((base + i, base + j));
                }
            }
        }
    }
    let first_bridge = 2 * cluster_size;
    for b in 0..bridges {
        let node = first_bridge + b;
        for side in 0..2 {
            let picks = rand::seq::index::sample(&mut rng, cluster_size, links.min(cluster_size));
            for p in picks {
                edges.push((side * cluster_size + p, node));
            }
        }
    }
    let n = first_bridge + bridges;
    let labels = (first_bridge..n).map(|v| Label::Int(v as u64)).collect();
    (build(n, &edges), labels)
}
