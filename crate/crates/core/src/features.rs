use std::collections::{BTreeSet, VecDeque};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, Node, PairBatch};
use crate::sparse::{SparseMat, SparseRow, Workspace};

pub const DEFAULT_MAX_ORDER: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CnOptions {
    /// Drop columns `i` and `j` from every slice of pair `(i, j)`.
    pub exclude_endpoints: bool,
    /// Compute each pair's rows on the graph with that pair's own edge removed.
    pub remove_target: bool,
    pub max_order: usize,
}

impl Default for CnOptions {
    fn default() -> Self {
        CnOptions {
            exclude_endpoints: false,
            remove_target: false,
            max_order: DEFAULT_MAX_ORDER,
        }
    }
}

impl CnOptions {
    pub fn heuristic() -> Self {
        CnOptions {
            exclude_endpoints: true,
            ..Default::default()
        }
    }
}

/// Walk-length combination `(k1, k2)` relative to order `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slice {
    Same,
    Lower,
    Upper,
}

impl Slice {
    pub const ALL: [Slice; 3] = [Slice::Same, Slice::Lower, Slice::Upper];

    pub fn lengths(self, k: usize) -> (usize, usize) {
        match self {
            Slice::Same => (k, k),
            Slice::Lower => (k - 1, k),
            Slice::Upper => (k, k - 1),
        }
    }

    pub fn label(self, k: usize) -> String {
        let (a, b) = self.lengths(k);
        format!("{a}-{b}")
    }
}

/// Order-`k` features for a batch: slices `(k,k)`, `(k-1,k)`, `(k,k-1)` and their sum.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderFeatures {
    pub order: usize,
    pub slices: [SparseMat; 3],
    pub combined: SparseMat,
}

impl OrderFeatures {
    pub fn nrows(&self) -> usize {
        self.combined.nrows()
    }

    pub fn map(&self, f: impl Fn(&SparseMat) -> SparseMat) -> OrderFeatures {
        OrderFeatures {
            order: self.order,
            slices: [f(&self.slices[0]), f(&self.slices[1]), f(&self.slices[2])],
            combined: f(&self.combined),
        }
    }
}

fn check_order(k: usize, max_order: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("order must be at least 1".into()));
    }
    if k > max_order {
        return Err(Error::Config(format!("order {k} exceeds max order {max_order}")));
    }
    Ok(())
}

/// Dense row `e_u^T A^l`.
pub fn adj_power_row(g: &Graph, u: usize, l: usize, max_order: usize) -> Result<Vec<f64>> {
    if l > max_order {
        return Err(Error::Config(format!("walk length {l} exceeds max order {max_order}")));
    }
    let rows = Workspace::new(g.n()).walk_rows(g, u, l, None);
    Ok(rows[l].to_dense(g.n()))
}

fn pair_rows(
    g: &Graph,
    ws: &mut Workspace,
    (u, v): (Node, Node),
    k_max: usize,
    opts: &CnOptions,
) -> Vec<[SparseRow; 3]> {
    let mask = (opts.remove_target && g.has_edge(u as usize, v as usize)).then_some((u, v));
    let wu = ws.walk_rows(g, u as usize, k_max, mask);
    let wv = ws.walk_rows(g, v as usize, k_max, mask);
    let ends = [u as usize, v as usize];
    (1..=k_max)
        .map(|k| {
            Slice::ALL.map(|s| {
                let (a, b) = s.lengths(k);
                let r = wu[a].hadamard(&wv[b]);
                if opts.exclude_endpoints {
                    r.without_columns(&ends)
                } else {
                    r
                }
            })
        })
        .collect()
}

/// Orders `1..=k_max` for every pair, two walk expansions per pair and never `A^k` itself.
pub fn cn_features(
    g: &Graph,
    batch: &PairBatch,
    k_max: usize,
    opts: &CnOptions,
) -> Result<Vec<OrderFeatures>> {
    check_order(k_max, opts.max_order)?;
    let n = g.n();
    let per_pair: Vec<Vec<[SparseRow; 3]>> = batch
        .pairs
        .par_iter()
        .map_init(|| Workspace::new(n), |ws, &p| pair_rows(g, ws, p, k_max, opts))
        .collect();
    let h = batch.len();
    let mut out: Vec<OrderFeatures> = (1..=k_max)
        .map(|k| OrderFeatures {
            order: k,
            slices: [SparseMat::zeros(0, n), SparseMat::zeros(0, n), SparseMat::zeros(0, n)],
            combined: SparseMat::zeros(0, n),
        })
        .collect();
    for of in &mut out {
        for s in &mut of.slices {
            s.rows.reserve(h);
        }
        of.combined.rows.reserve(h);
    }
    for rows in per_pair {
        for (ki, [a, b, c]) in rows.into_iter().enumerate() {
            let of = &mut out[ki];
            of.combined.rows.push(a.add_scaled(&b, 1.0).add_scaled(&c, 1.0));
            of.slices[0].rows.push(a);
            of.slices[1].rows.push(b);
            of.slices[2].rows.push(c);
        }
    }
    Ok(out)
}

pub fn cn_order_features(
    g: &Graph,
    batch: &PairBatch,
    k: usize,
    opts: &CnOptions,
) -> Result<OrderFeatures> {
    let mut all = cn_features(g, batch, k, opts)?;
    Ok(all.pop().expect("k >= 1"))
}

/// Nodes with positive combined order-`k` count for `(i, j)`.
pub fn cn_set(g: &Graph, i: usize, j: usize, k: usize, exclude_endpoints: bool) -> BTreeSet<usize> {
    let opts = CnOptions {
        exclude_endpoints,
        max_order: k.max(1),
        ..Default::default()
    };
    let mut ws = Workspace::new(g.n());
    let rows = pair_rows(g, &mut ws, (i as Node, j as Node), k, &opts);
    let [a, b, c] = &rows[k - 1];
    a.iter()
        .chain(b.iter())
        .chain(c.iter())
        .filter(|&(_, x)| x > 0.0)
        .map(|(c, _)| c)
        .collect()
}

fn bfs(g: &Graph, s: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    let mut q = VecDeque::from([s]);
    dist[s] = 0;
    while let Some(x) = q.pop_front() {
        for &y in g.neighbors(x) {
            let y = y as usize;
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                q.push_back(y);
            }
        }
    }
    dist
}

/// Shortest-path variant: `c` with `(spd(i,c), spd(c,j))` one of the three order-`k` combinations.
pub fn cn_set_spd(g: &Graph, i: usize, j: usize, k: usize) -> BTreeSet<usize> {
    let (di, dj) = (bfs(g, i), bfs(g, j));
    (0..g.n())
        .filter(|&c| {
            Slice::ALL
                .iter()
                .any(|s| s.lengths(k) == (di[c], dj[c]))
        })
        .collect()
}

pub fn write_feature_dump<W: Write>(feats: &[OrderFeatures], mut w: W) -> Result<()> {
    writeln!(w, "pair_index,node,k,slice,count")?;
    for of in feats {
        for (s, mat) in Slice::ALL.iter().zip(&of.slices) {
            let label = s.label(of.order);
            for (p, row) in mat.rows.iter().enumerate() {
                for (c, x) in row.iter() {
                    writeln!(w, "{p},{c},{},{label},{x}", of.order)?;
                }
            }
        }
    }
    Ok(())
}
