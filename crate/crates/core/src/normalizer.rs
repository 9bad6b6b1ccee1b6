use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{cn_set, OrderFeatures, Slice};
use crate::graph::Graph;
use crate::sparse::Workspace;
use crate::state::RunningState;

pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const EXACT_PARTICIPATION_LIMIT: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMode {
    Exact,
    Running,
}

impl CountMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CountMode::Exact => "exact",
            CountMode::Running => "running",
        }
    }
}

/// Per-node walk participation totals at one order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticipationCounts {
    pub order: usize,
    pub counts: Vec<f64>,
    pub mode: CountMode,
}

pub fn exact_walk_participation(
    g: &Graph,
    k: usize,
    exclude_endpoints: bool,
) -> Result<ParticipationCounts> {
    exact_walk_participation_limited(g, k, exclude_endpoints, EXACT_PARTICIPATION_LIMIT)
}

/// Sum over ordered pairs `i != j` of `combined(i, j)[c]`, without touching the pairs.
///
/// Slice `(a, b)` contributes `s_a(c) s_b(c) - (A^{a+b})_cc`, where `s_l` are the row sums of
/// `A^l`; excluding endpoints further removes the `i = c` and `j = c` terms.
pub fn exact_walk_participation_limited(
    g: &Graph,
    k: usize,
    exclude_endpoints: bool,
    limit: usize,
) -> Result<ParticipationCounts> {
    if k == 0 {
        return Err(Error::Config("order must be at least 1".into()));
    }
    if g.n() > limit {
        return Err(Error::Scale(format!(
            "exact participation needs n <= {limit} (n = {}); use running mode",
            g.n()
        )));
    }
    let counts = (0..g.n())
        .into_par_iter()
        .map_init(
            || Workspace::new(g.n()),
            |ws, c| {
                let w = ws.walk_rows(g, c, k, None);
                let s: Vec<f64> = w.iter().map(|r| r.sum()).collect();
                let diag: Vec<f64> = w.iter().map(|r| r.get(c)).collect();
                let mut total = 0.0;
                for sl in Slice::ALL {
                    let (a, b) = sl.lengths(k);
                    total += s[a] * s[b] - w[a].dot(&w[b]);
                    if exclude_endpoints {
                        total -= diag[a] * (s[b] - diag[b]) + diag[b] * (s[a] - diag[a]);
                    }
                }
                total
            },
        )
        .collect();
    Ok(ParticipationCounts {
        order: k,
        counts,
        mode: CountMode::Exact,
    })
}

/// Folds this batch's column sums of `CN^k` into the running estimate.
pub fn update_running_participation(state: &mut RunningState, feats: &OrderFeatures) {
    let sums = feats.combined.col_sums();
    let r = state.psi_hat.entry(feats.order).or_default();
    r.update(&sums);
    let c = r.count;
    state.bump(c);
}

pub fn running_participation(state: &RunningState, k: usize, n: usize) -> ParticipationCounts {
    let mut counts = state
        .psi_hat
        .get(&k)
        .map(|r| r.value.clone())
        .unwrap_or_default();
    counts.resize(n, 0.0);
    ParticipationCounts {
        order: k,
        counts,
        mode: CountMode::Running,
    }
}

/// Column weights `1 / max(count, eps)`; with `zero_unseen`, columns never observed get 0.
pub fn inverse_weights(counts: &[f64], epsilon: f64, zero_unseen: bool) -> Vec<f64> {
    counts
        .iter()
        .map(|&c| {
            if zero_unseen && c <= 0.0 {
                0.0
            } else {
                1.0 / c.max(epsilon)
            }
        })
        .collect()
}

pub fn apply_normalization(
    feats: &OrderFeatures,
    counts: &ParticipationCounts,
    epsilon: f64,
) -> Result<OrderFeatures> {
    if feats.order != counts.order {
        return Err(Error::Config(format!(
            "features are order {} but counts are order {}",
            feats.order, counts.order
        )));
    }
    let w = inverse_weights(&counts.counts, epsilon, false);
    Ok(feats.map(|m| m.scale_columns(&w)))
}

/// Exact `normalizedCN^k` with unordered-pair participation (half the ordered total).
#[derive(Clone, Debug)]
pub struct NormalizedCn {
    pub order: usize,
    pub unordered: Vec<f64>,
}

impl NormalizedCn {
    pub fn new(g: &Graph, k: usize) -> Result<Self> {
        let p = exact_walk_participation(g, k, true)?;
        Ok(NormalizedCn {
            order: k,
            unordered: p.counts.iter().map(|c| c / 2.0).collect(),
        })
    }

    pub fn score(&self, g: &Graph, i: usize, j: usize) -> f64 {
        cn_set(g, i, j, self.order, true)
            .into_iter()
            .map(|c| {
                let p = self.unordered[c];
                assert!(p > 0.0, "node {c} is a common neighbor but has no participation");
                1.0 / p
            })
            .fold(0.0, |s, x| s + x)
    }

    /// Each term times `C(d(c), 2) / d(c)`; equals resource allocation at order 1.
    pub fn corrected_score(&self, g: &Graph, i: usize, j: usize) -> f64 {
        cn_set(g, i, j, self.order, true)
            .into_iter()
            .map(|c| {
                let d = g.degree(c) as f64;
                let pairs = d * (d - 1.0) / 2.0;
                (1.0 / self.unordered[c]) * (pairs / d)
            })
            .fold(0.0, |s, x| s + x)
    }
}

pub fn normalized_cn_score(g: &Graph, i: usize, j: usize, k: usize) -> Result<f64> {
    Ok(NormalizedCn::new(g, k)?.score(g, i, j))
}

pub fn write_participation<W: Write>(p: &ParticipationCounts, mut w: W) -> Result<()> {
    writeln!(w, "node,k,count,mode")?;
    for (c, x) in p.counts.iter().enumerate() {
        writeln!(w, "{c},{},{x},{}", p.order, p.mode.as_str())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{cn_order_features, CnOptions};
    use crate::graph::PairBatch;
    use crate::sparse::SparseMat;

    fn g4() -> Graph {
        Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap()
    }

    #[test]
    fn exact_counts_g4_and_star() {
        let p = exact_walk_participation(&g4(), 1, true).unwrap();
        assert_eq!(p.counts, vec![2.0, 2.0, 6.0, 0.0]);
        let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let p = exact_walk_participation(&star, 1, true).unwrap();
        assert_eq!(p.counts, vec![6.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn guard() {
        let g = Graph::empty(10);
        assert!(matches!(
            exact_walk_participation_limited(&g, 1, true, 5),
            Err(Error::Scale(_))
        ));
    }

    fn one_node_feats(x: f64) -> OrderFeatures {
        let m = SparseMat::from_dense(&[vec![x]]);
        OrderFeatures {
            order: 1,
            slices: [m.clone(), SparseMat::zeros(1, 1), SparseMat::zeros(1, 1)],
            combined: m,
        }
    }

    #[test]
    fn running_sma() {
        let mut st = RunningState::default();
        update_running_participation(&mut st, &one_node_feats(2.0));
        assert_eq!(running_participation(&st, 1, 1).counts, vec![2.0]);
        update_running_participation(&mut st, &one_node_feats(4.0));
        assert_eq!(running_participation(&st, 1, 1).counts, vec![3.0]);
        let mut z = RunningState::default();
        update_running_participation(&mut z, &one_node_feats(0.0));
        update_running_participation(&mut z, &one_node_feats(0.0));
        assert_eq!(running_participation(&z, 1, 1).counts, vec![0.0]);
    }

    #[test]
    fn normalization_example() {
        let g = g4();
        let f = cn_order_features(&g, &PairBatch::new(vec![(0, 2)], 4).unwrap(), 1, &CnOptions::default())
            .unwrap();
        let p = exact_walk_participation(&g, 1, true).unwrap();
        let out = apply_normalization(&f, &p, DEFAULT_EPSILON).unwrap();
        assert_eq!(out.combined.to_dense(), vec![vec![0.5, 0.5, 1.0 / 6.0, 0.0]]);
        let ones = ParticipationCounts {
            order: 1,
            counts: vec![1.0; 4],
            mode: CountMode::Exact,
        };
        assert_eq!(apply_normalization(&f, &ones, DEFAULT_EPSILON).unwrap(), f);
    }

    #[test]
    fn normalized_cn_g4() {
        let g = g4();
        let nc = NormalizedCn::new(&g, 1).unwrap();
        assert_eq!(nc.score(&g, 0, 2), 1.0);
        assert_eq!(nc.corrected_score(&g, 0, 2), 0.5);
        let d = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(normalized_cn_score(&d, 0, 3, 1).unwrap(), 0.0);
    }
}
