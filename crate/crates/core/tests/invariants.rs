use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use veo_core::report::{reemit, REPORT_FILES};
use veo_core::{edv, load_edge_list_str, validate_and_repair, Candidate, Graph, Label, SeedSet, Strictness};

fn graph() -> impl Strategy<Value = Graph> {
    (2usize..12)
        .prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 1..30)))
        .prop_map(|(n, edges)| {
            let mut text = String::new();
            for v in 0..n {
                text.push_str(&format!("{v} {v}\n"));
            }
            for (a, b) in edges {
                if a != b {
                    text.push_str(&format!("{a} {b}\n"));
                }
            }
            load_edge_list_str(&text).unwrap().0
        })
}

proptest! {
    #[test]
    fn edv_is_bounded(g in graph(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..6), p in 0.0f64..=1.0) {
        let n = g.node_count();
        let mut members: Vec<usize> = picks.iter().map(|i| i.index(n)).collect();
        members.sort_unstable();
        members.dedup();
        let k = members.len() as f64;
        let s = SeedSet::new(&g, members).unwrap();
        let v = edv(&g, &s, p).unwrap().value;
        prop_assert!(v >= k - 1e-12);
        prop_assert!(v <= n as f64 + 1e-12);
    }

    #[test]
    fn repair_always_yields_k_valid_nodes(
        g in graph(),
        raw in prop::collection::vec(0u32..20, 0..10),
        k in 1usize..8,
        seed in any::<u64>(),
    ) {
        let labels: Vec<Label> = raw.iter().map(|&v| Label::Int(v as u64)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, _) = validate_and_repair(&g, k, Candidate::Init(&labels), Strictness::Strict, &mut rng);
        prop_assert_eq!(s.k(), k.min(g.node_count()));
        let mut m = s.members().to_vec();
        m.dedup();
        prop_assert_eq!(m.len(), s.k());
        prop_assert!(s.members().iter().all(|&v| v < g.node_count()));
    }
}

#[test]
fn reports_reemit_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = veo_core::ExperimentConfig::default();
    cfg.experiment.out = dir.path().to_path_buf();
    cfg.experiment.networks = vec!["synth:ba:40:2:3".into()];
    cfg.experiment.runs = 3;
    cfg.engine.generations = 2;
    cfg.select_arms(&["normal".into(), "veo".into()]).unwrap();
    veo_core::run_experiment(&cfg).unwrap();
    for name in REPORT_FILES.iter().chain(&["manifest.json"]) {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(reemit(name, &text).unwrap(), text, "{name}");
    }
}
