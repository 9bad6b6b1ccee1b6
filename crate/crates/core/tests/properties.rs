mod common;

use std::collections::BTreeSet;

use hocn::diagnostics::jsd;
use hocn::eval::{evaluate_scores, hits_at_k};
use hocn::features::{cn_features, cn_order_features, CnOptions};
use hocn::graph::{load_edge_list, split_edges, write_edge_list, EdgeFormat, PairBatch};
use hocn::normalizer::{
    apply_normalization, exact_walk_participation, running_participation, update_running_participation,
    DEFAULT_EPSILON,
};
use hocn::orthogonalizer::{full_graph_orthogonalize, gram_schmidt_batch};
use hocn::scorer::{heuristic_score, HeuristicKind};
use hocn::sparse::SparseRow;
use hocn::state::{RunningScalar, RunningState};
use hocn::Graph;
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2..=max_n).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..3 * n)))
}

fn build(n: usize, e: &[(usize, usize)]) -> Graph {
    Graph::from_edges(n, e.iter().copied()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_round_trip((n, e) in graph_strategy(30)) {
        let g = build(n, &e);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = load_edge_list(&buf[..], EdgeFormat::Tsv).unwrap().graph;
        prop_assert_eq!(back, g);
    }

    #[test]
    fn rows_match_raw_edges((n, e) in graph_strategy(30)) {
        let g = build(n, &e);
        for u in 0..n {
            let brute: BTreeSet<usize> = e
                .iter()
                .filter(|&&(a, b)| a != b && (a == u || b == u))
                .map(|&(a, b)| if a == u { b } else { a })
                .collect();
            let rows: BTreeSet<usize> = g.neighbors(u).iter().map(|&x| x as usize).collect();
            prop_assert_eq!(rows, brute);
        }
    }

    #[test]
    fn split_is_reproducible((n, e) in graph_strategy(40), seed in any::<u64>()) {
        let g = build(n, &e);
        prop_assume!(g.num_edges() >= 10);
        let a = split_edges(&g, (0.7, 0.1, 0.2), seed).unwrap();
        let b = split_edges(&g, (0.7, 0.1, 0.2), seed).unwrap();
        let dump = |s: &hocn::SplitResult| {
            let mut v = Vec::new();
            hocn::graph::write_split_manifest(s, &mut v).unwrap();
            v
        };
        prop_assert_eq!(dump(&a), dump(&b));
    }

    #[test]
    fn hits_monotone_in_k(pos in prop::collection::vec(0u32..50, 1..40), neg in prop::collection::vec(0u32..50, 30..60)) {
        let p: Vec<f64> = pos.iter().map(|&x| x as f64).collect();
        let q: Vec<f64> = neg.iter().map(|&x| x as f64).collect();
        let h: Vec<f64> = (1..=q.len()).map(|k| hits_at_k(&p, &q, k).unwrap()).collect();
        prop_assert!(h.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn metrics_rank_invariant(pos in prop::collection::vec(-40i64..40, 1..40), neg in prop::collection::vec(-40i64..40, 20..50)) {
        let f = |x: i64| (x * x * x + 5 * x) as f64;
        let p: Vec<f64> = pos.iter().map(|&x| x as f64).collect();
        let q: Vec<f64> = neg.iter().map(|&x| x as f64).collect();
        let pt: Vec<f64> = pos.iter().map(|&x| f(x)).collect();
        let qt: Vec<f64> = neg.iter().map(|&x| f(x)).collect();
        let ks = [1, 5, 20];
        prop_assert_eq!(evaluate_scores(&p, &q, &ks, 0).unwrap(), evaluate_scores(&pt, &qt, &ks, 0).unwrap());
    }

    #[test]
    fn jsd_symmetric_and_bounded(a in prop::collection::vec(-3.0f64..3.0, 1..12), b in prop::collection::vec(-3.0f64..3.0, 1..12)) {
        let (p, q) = (SparseRow::from_dense(&a), SparseRow::from_dense(&b));
        let (x, y) = (jsd(&p, &q), jsd(&q, &p));
        prop_assert_eq!(x, y);
        if let Some(v) = x {
            prop_assert!((0.0..=std::f64::consts::LN_2 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn normalization_keeps_zeros((n, e) in graph_strategy(16), k in 1usize..=3) {
        let g = build(n, &e);
        let pairs = common::all_pairs(n);
        let f = cn_order_features(&g, &PairBatch::labeled(pairs, true), k, &CnOptions::default()).unwrap();
        let counts = exact_walk_participation(&g, k, false).unwrap();
        let out = apply_normalization(&f, &counts, DEFAULT_EPSILON).unwrap();
        for (a, b) in f.combined.rows.iter().zip(&out.combined.rows) {
            for c in 0..n {
                if a.get(c) == 0.0 {
                    prop_assert_eq!(b.get(c), 0.0);
                }
            }
        }
    }

    #[test]
    fn running_scalar_is_arithmetic_mean(xs in prop::collection::vec(-1e3f64..1e3, 1..300)) {
        let mut r = RunningScalar::default();
        for &x in &xs {
            r.update(x);
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let scale = xs.iter().map(|x| x.abs()).fold(1.0, f64::max);
        prop_assert!((r.value - mean).abs() <= 1e-12 * scale);
    }

    #[test]
    fn first_order_direction_is_scale_free((n, e) in graph_strategy(14), c in 0.01f64..100.0) {
        let g = build(n, &e);
        let pairs = common::all_pairs(n);
        let f = cn_features(&g, &PairBatch::labeled(pairs, true), 2, &CnOptions::default()).unwrap();
        let base = vec![f[0].combined.clone(), f[1].combined.clone()];
        let scaled = vec![f[0].combined.scaled(c), f[1].combined.clone()];
        let a = gram_schmidt_batch(&base, &mut RunningState::new(), true).unwrap();
        let b = gram_schmidt_batch(&scaled, &mut RunningState::new(), true).unwrap();
        let d = a.orders[0].add_scaled(&b.orders[0], -1.0).frob_norm();
        prop_assert!(d <= 1e-12, "{d}");
        let d2 = a.orders[1].add_scaled(&b.orders[1], -1.0).frob_norm();
        prop_assert!(d2 <= 1e-9, "{d2}");
    }

    #[test]
    fn adding_common_neighbor_never_lowers_cn((n, e) in graph_strategy(20), i in 0usize..20, j in 0usize..20) {
        let (i, j) = (i % n, j % n);
        prop_assume!(i != j);
        let g = build(n, &e);
        let before = heuristic_score(&g, (i, j), HeuristicKind::Cn).unwrap();
        let mut e2 = e.clone();
        e2.extend([(i, n), (j, n)]);
        let g2 = build(n + 1, &e2);
        let after = heuristic_score(&g2, (i, j), HeuristicKind::Cn).unwrap();
        prop_assert!(after >= before + 1.0);
    }
}

#[test]
fn exact_mode_orthogonality() {
    for seed in 0..8 {
        let g = common::er(40, 0.12, 500 + seed);
        let b = full_graph_orthogonalize(&g, 3, &CnOptions::default()).unwrap();
        for x in 0..3 {
            for y in x + 1..3 {
                let d = b.orders[x].frob_dot(&b.orders[y]);
                assert!(d.abs() <= 1e-6, "seed {seed} <{},{}> = {d}", x + 1, y + 1);
            }
        }
    }
}

#[test]
fn one_epoch_of_ordered_pairs_recovers_exact_counts() {
    let g = common::er(24, 0.2, 77);
    let n = g.n();
    let ordered: Vec<(u32, u32)> = (0..n as u32)
        .flat_map(|i| (0..n as u32).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let h = 23;
    assert_eq!(ordered.len() % h, 0);
    for k in 1..=3 {
        let mut state = RunningState::new();
        let mut batches = 0;
        for chunk in ordered.chunks(h) {
            let f = cn_order_features(&g, &PairBatch::labeled(chunk.to_vec(), true), k, &CnOptions::default()).unwrap();
            update_running_participation(&mut state, &f);
            batches += 1;
        }
        let est = running_participation(&state, k, n);
        let exact = exact_walk_participation(&g, k, false).unwrap();
        for c in 0..n {
            let v = est.counts[c] * batches as f64;
            assert!(common::rel_close(v, exact.counts[c], 1e-9), "k={k} c={c}: {v} vs {}", exact.counts[c]);
        }
    }
}

#[test]
fn jsd_examples_symmetric_on_real_rows() {
    let g = hocn::theory::sample_ba_graph(40, 2, 1).unwrap();
    let pairs: Vec<(u32, u32)> = g.edges().map(|(u, v)| (u as u32, v as u32)).collect();
    let f = cn_features(&g, &PairBatch::labeled(pairs, true), 2, &CnOptions::default()).unwrap();
    for (p, q) in f[0].combined.rows.iter().zip(&f[1].combined.rows) {
        assert_eq!(jsd(p, q), jsd(q, p));
    }
}
