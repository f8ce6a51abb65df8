//! Benchmark inputs shared by the criterion targets.

use veo_core::synth::barabasi_albert;
use veo_core::{Graph, SeedSet};

pub fn scale_free(n: usize) -> Graph {
    barabasi_albert(n, 2, 17)
}

/// The `k` highest-degree nodes.
pub fn top_degree(g: &Graph, k: usize) -> SeedSet {
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(g.degree(v)));
    order.truncate(k);
    SeedSet::new(g, order).expect("valid nodes")
}
