//! Disjoint-pair and shortest-path results checked against brute force.

mod common;

use common::{random_dense, Dense};
use ipowdm_core::routing::{Graph, PathPair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_pair_shape(g: &Graph<i64>, pair: &PathPair<i64>, s: usize, t: usize) {
    assert!(pair.is_disjoint(), "{pair:?}");
    for p in [&pair.primary, &pair.secondary] {
        assert_eq!(p.nodes.first(), Some(&s));
        assert_eq!(p.nodes.last(), Some(&t));
        assert_eq!(p.links.len() + 1, p.nodes.len());
        let mut total = 0;
        for (k, &e) in p.links.iter().enumerate() {
            let (a, b, w) = g.edge(e);
            let (u, v) = (p.nodes[k], p.nodes[k + 1]);
            assert!((a, b) == (u, v) || (a, b) == (v, u), "edge {e} does not join {u}-{v}");
            total += w;
        }
        assert_eq!(total, p.length);
    }
    assert!(pair.primary.length <= pair.secondary.length);
}

#[test]
fn land_pair_matches_brute_force_on_seeded_graphs() {
    let mut checked = 0;
    let mut with_pair = 0;
    for seed in 0..160u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=10);
        let d = random_dense(&mut rng, n);
        let g = d.graph();
        let s = rng.random_range(0..n);
        let t = (s + rng.random_range(1..n)) % n;
        let oracle = d.best_pair(s, t);
        let got = g.disjoint_pair(s, t);
        match (oracle, &got) {
            (None, None) => {}
            (Some(best), Some(pair)) => {
                check_pair_shape(&g, pair, s, t);
                assert_eq!(pair.combined_length(), best, "seed {seed}");
                with_pair += 1;
            }
            _ => panic!("seed {seed}: oracle {oracle:?} vs {got:?}"),
        }
        checked += 1;
    }
    assert!(checked >= 100);
    assert!(with_pair >= 60, "too few instances with a pair: {with_pair}");
}

#[test]
fn land_pair_matches_brute_force_on_every_four_and_five_node_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in [4usize, 5] {
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for mask in 0u32..(1 << slots.len()) {
            let mut w = vec![vec![None; n]; n];
            for (k, &(a, b)) in slots.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    let x = rng.random_range(1..=9);
                    w[a][b] = Some(x);
                    w[b][a] = Some(x);
                }
            }
            let d = Dense { n, w };
            if !d.connected() {
                continue;
            }
            let g = d.graph();
            let got = g.disjoint_pair(0, n - 1);
            assert_eq!(got.as_ref().map(|p| p.combined_length()), d.best_pair(0, n - 1), "n={n} mask={mask:b}");
            if let Some(p) = &got {
                check_pair_shape(&g, p, 0, n - 1);
            }
        }
    }
}

#[test]
fn trap_topology_needs_rerouting_of_the_shortest_path() {
    // the shortest path s-a-b-t blocks every disjoint partner; the optimum
    // avoids a-b entirely: s-a-d-t (5) and s-c-b-t (5)
    let (s, a, b, t, c, d, e) = (0, 1, 2, 3, 4, 5, 6);
    let g = Graph::from_edges(7, [(s, a, 1i64), (a, b, 1), (b, t, 1), (s, c, 2), (c, b, 2), (a, d, 2), (d, t, 2), (s, e, 10), (e, t, 10)]);
    assert_eq!(g.shortest_path(s, t).unwrap().nodes, vec![s, a, b, t]);
    let pair = g.disjoint_pair(s, t).unwrap();
    assert_eq!(pair.combined_length(), 10);
    let mut legs = vec![pair.primary.nodes.clone(), pair.secondary.nodes.clone()];
    legs.sort();
    assert_eq!(legs, vec![vec![s, a, d, t], vec![s, c, b, t]]);
}

#[test]
fn float_weights_agree_with_integer_weights() {
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(3..=9);
        let d = random_dense(&mut rng, n);
        let gi = d.graph();
        let gf: Graph<f64> = Graph::from_edges(n, d.edges().into_iter().map(|(a, b, w)| (a, b, w as f64 * 0.5)));
        let pi = gi.disjoint_pair(0, n - 1);
        let pf = gf.disjoint_pair(0, n - 1);
        assert_eq!(pi.as_ref().map(|p| p.combined_length() as f64 * 0.5), pf.as_ref().map(|p| p.combined_length()));
    }
}

#[test]
fn bridge_separated_endpoints_have_no_pair() {
    // two triangles joined by the bridge 2-3
    let g = Graph::from_edges(6, [(0, 1, 1i64), (1, 2, 1), (2, 0, 1), (2, 3, 5), (3, 4, 1), (4, 5, 1), (5, 3, 1)]);
    assert_eq!(g.bridges(), vec![3]);
    for (s, t) in [(0, 4), (1, 5), (2, 3), (0, 3)] {
        assert!(g.disjoint_pair(s, t).is_none(), "{s}-{t}");
        assert!(g.shortest_path(s, t).is_some());
    }
    assert!(g.disjoint_pair(0, 1).is_some());
    assert!(g.disjoint_pair(3, 5).is_some());
}

#[test]
fn cut_vertex_blocks_node_disjointness_even_with_two_edge_routes() {
    // bowtie: two edge-disjoint routes 0->4 exist but both cross node 2
    let g = Graph::from_edges(5, [(0, 1, 1i64), (1, 2, 1), (0, 2, 1), (2, 3, 1), (3, 4, 1), (2, 4, 1)]);
    assert!(g.bridges().is_empty());
    assert!(g.disjoint_pair(0, 4).is_none());
}

#[test]
fn shortest_path_matches_matrix_dijkstra() {
    for seed in 0..120u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let n = rng.random_range(2..=10);
        let d = random_dense(&mut rng, n);
        let g = d.graph();
        let none = vec![false; n];
        let no_edges = vec![vec![false; n]; n];
        for t in 1..n {
            let want = d.shortest_avoiding(0, t, &none, &no_edges);
            let got = g.shortest_path(0, t);
            assert_eq!(got.as_ref().map(|p| p.length), want, "seed {seed} t {t}");
            // among equal-length paths the lexicographically smallest node list wins
            let min_lex = d.simple_paths(0, t).into_iter().filter(|(_, l)| Some(*l) == want).map(|(p, _)| p).min();
            assert_eq!(got.map(|p| p.nodes), min_lex, "seed {seed} t {t}");
        }
    }
}

#[test]
fn results_ignore_edge_insertion_order() {
    for seed in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let n = rng.random_range(4..=9);
        let d = random_dense(&mut rng, n);
        let mut edges = d.edges();
        let g1 = Graph::from_edges(n, edges.clone());
        edges.reverse();
        let g2 = Graph::from_edges(n, edges.iter().map(|&(a, b, w)| (b, a, w)));
        let p1 = g1.disjoint_pair(0, n - 1);
        let p2 = g2.disjoint_pair(0, n - 1);
        assert_eq!(
            p1.as_ref().map(|p| (&p.primary.nodes, &p.secondary.nodes)),
            p2.as_ref().map(|p| (&p.primary.nodes, &p.secondary.nodes))
        );
        assert_eq!(g1.shortest_path(0, n - 1).map(|p| p.nodes), g2.shortest_path(0, n - 1).map(|p| p.nodes));
    }
}
