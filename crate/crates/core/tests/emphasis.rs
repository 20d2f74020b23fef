use neteffect::emphasis::{random_walk_counts, walk_error_bound};
use neteffect::{emphasis_matrix, Graph, WalkConfig};
use proptest::prelude::*;

fn two_cliques_with_bridge(k: usize) -> Graph {
    let mut edges = Vec::new();
    for base in [0, k] {
        for i in 0..k {
            for j in i + 1..k {
                edges.push((base + i, base + j));
            }
        }
    }
    edges.push((k - 1, k));
    Graph::from_edges(2 * k, edges).unwrap()
}

fn arb_connected(max_n: usize) -> impl Strategy<Value = Graph> {
    (4usize..max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), n..3 * n).prop_map(move |extra| {
            // a spanning path keeps every node non-isolated
            let edges = (0..n - 1).map(|i| (i, i + 1)).chain(extra.into_iter().filter(|(u, v)| u != v));
            Graph::from_edges(n, edges.collect::<Vec<_>>()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weights_follow_the_graph(g in arb_connected(40), seed in 0u64..100) {
        let cfg = WalkConfig { rank: 8, seed, ..Default::default() };
        let e = emphasis_matrix(&g, &cfg).unwrap();
        prop_assert_eq!(e.matrix.nnz(), 2 * g.num_edges());
        prop_assert!(e.matrix.is_symmetric(0.0));
        for (i, j, w) in e.matrix.iter() {
            prop_assert!(g.has_edge(i, j));
            prop_assert!(w > 0.0 && w <= 1.0, "weight {}", w);
        }
    }

    #[test]
    fn walk_counts_stay_within_reach(g in arb_connected(30), length in 1usize..6) {
        let cfg = WalkConfig { walk_length: length, trials: 3, ..Default::default() };
        let w = random_walk_counts(&g, &cfg).unwrap();
        for i in 0..g.num_nodes() {
            let (_, vals) = w.row(i);
            let total: f64 = vals.iter().sum();
            prop_assert!(total <= (length * 3) as f64);
        }
    }
}

#[test]
fn deterministic_for_a_seed() {
    let g = two_cliques_with_bridge(6);
    let cfg = WalkConfig { rank: 4, seed: 7, ..Default::default() };
    assert_eq!(emphasis_matrix(&g, &cfg).unwrap().matrix, emphasis_matrix(&g, &cfg).unwrap().matrix);
}

#[test]
fn bridge_is_deemphasized() {
    let k = 8;
    let g = two_cliques_with_bridge(k);
    let cfg = WalkConfig { rank: 4, trials: 50, ..Default::default() };
    let a = emphasis_matrix(&g, &cfg).unwrap().matrix;
    let bridge = a.get(k - 1, k).unwrap();
    let inner: Vec<f64> = a.iter().filter(|&(i, j, _)| (i < k) == (j < k)).map(|t| t.2).collect();
    let mean = inner.iter().sum::<f64>() / inner.len() as f64;
    assert!(bridge < mean, "bridge {bridge} vs clique mean {mean}");
}

#[test]
fn star_leaves_are_interchangeable() {
    // every leaf sees the same neighborhood, so all spokes get similar weight
    let g = Graph::from_edges(9, (1..9).map(|i| (0, i))).unwrap();
    let cfg = WalkConfig { rank: 2, trials: 200, ..Default::default() };
    let a = emphasis_matrix(&g, &cfg).unwrap().matrix;
    let spokes: Vec<f64> = (1..9).map(|i| a.get(0, i).unwrap()).collect();
    let (lo, hi) = spokes.iter().fold((f64::MAX, f64::MIN), |(l, h), &w| (l.min(w), h.max(w)));
    assert!(hi - lo < 0.1, "{spokes:?}");
}

#[test]
fn non_backtracking_bound_is_tighter() {
    for l in 2..20 {
        let nb = walk_error_bound(l, 10, 0.05, false).unwrap();
        let bt = walk_error_bound(l, 10, 0.05, true).unwrap();
        assert!(nb <= bt);
    }
    assert_eq!(2.0 * walk_error_bound(4, 10, 0.05, false).unwrap(), walk_error_bound(4, 10, 0.05, true).unwrap());
}
