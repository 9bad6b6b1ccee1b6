use std::io::BufRead;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{derive_seed, rng};

pub const MAX_DEPTH: usize = 8;

/// Row-major `(n, F)` node matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEmbedding {
    pub n: usize,
    pub f: usize,
    pub data: Vec<f64>,
}

impl NodeEmbedding {
    pub fn zeros(n: usize, f: usize) -> Self {
        NodeEmbedding {
            n,
            f,
            data: vec![0.0; n * f],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let f = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != f) {
            return Err(Error::Input("ragged feature rows".into()));
        }
        Ok(NodeEmbedding {
            n: rows.len(),
            f,
            data: rows.concat(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut e = NodeEmbedding::zeros(n, n);
        for i in 0..n {
            e.data[i * n + i] = 1.0;
        }
        e
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.f..(i + 1) * self.f]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.f..(i + 1) * self.f]
    }

    /// Zero-mean, unit-variance columns; constant columns are only centered.
    pub fn standardize(&mut self) {
        if self.n == 0 {
            return;
        }
        for c in 0..self.f {
            let mean = (0..self.n).map(|i| self.data[i * self.f + c]).sum::<f64>() / self.n as f64;
            let var = (0..self.n)
                .map(|i| (self.data[i * self.f + c] - mean).powi(2))
                .sum::<f64>()
                / self.n as f64;
            let s = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
            for i in 0..self.n {
                let x = &mut self.data[i * self.f + c];
                *x = (*x - mean) * s;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureSource {
    Identity,
    /// One-hot bucket of `floor(log2(1 + d))`.
    DegreeOneHotLog,
    /// `ln(1 + d)` plus a seeded random projection of the adjacency row.
    Default { dim: usize, seed: u64 },
    Given(NodeEmbedding),
}

/// `ln(1 + d(i))` followed by `dim` columns `sum_{c in N(i)} R_c`, with `R_c` in `{+-1/sqrt(dim)}`.
pub fn default_features(g: &Graph, dim: usize, seed: u64) -> NodeEmbedding {
    let n = g.n();
    let scale = 1.0 / (dim.max(1) as f64).sqrt();
    let proj: Vec<f64> = (0..n)
        .flat_map(|c| {
            let mut r = rng(derive_seed(seed, 0x5eed, c as u64));
            (0..dim)
                .map(move |_| if r.gen::<bool>() { scale } else { -scale })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut x = NodeEmbedding::zeros(n, dim + 1);
    for i in 0..n {
        let row = x.row_mut(i);
        row[0] = (1.0 + g.degree(i) as f64).ln();
        for &c in g.neighbors(i) {
            let c = c as usize;
            for f in 0..dim {
                row[1 + f] += proj[c * dim + f];
            }
        }
    }
    x
}

impl FeatureSource {
    pub fn materialize(&self, g: &Graph) -> Result<NodeEmbedding> {
        match self {
            FeatureSource::Identity => Ok(NodeEmbedding::identity(g.n())),
            FeatureSource::DegreeOneHotLog => {
                let bucket = |d: usize| (1.0 + d as f64).log2().floor() as usize;
                let f = bucket(g.max_degree()) + 1;
                let mut x = NodeEmbedding::zeros(g.n(), f);
                for i in 0..g.n() {
                    x.row_mut(i)[bucket(g.degree(i))] = 1.0;
                }
                Ok(x)
            }
            FeatureSource::Default { dim, seed } => Ok(default_features(g, *dim, *seed)),
            FeatureSource::Given(x) => {
                if x.n != g.n() {
                    return Err(Error::Input(format!(
                        "feature matrix has {} rows but graph has {} nodes",
                        x.n,
                        g.n()
                    )));
                }
                Ok(x.clone())
            }
        }
    }
}

/// `H = Â^L X` with `Â = D̃^{-1/2} (A + I) D̃^{-1/2}`.
pub fn propagate_features(g: &Graph, x: &NodeEmbedding, depth: usize) -> Result<NodeEmbedding> {
    if depth > MAX_DEPTH {
        return Err(Error::Config(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    if x.n != g.n() {
        return Err(Error::Input(format!(
            "feature matrix has {} rows but graph has {} nodes",
            x.n,
            g.n()
        )));
    }
    let inv_sqrt: Vec<f64> = (0..g.n())
        .map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt())
        .collect();
    let mut h = x.clone();
    for _ in 0..depth {
        let mut next = NodeEmbedding::zeros(h.n, h.f);
        for i in 0..g.n() {
            let si = inv_sqrt[i];
            let out = &mut next.data[i * h.f..(i + 1) * h.f];
            let self_w = si * si;
            for (o, v) in out.iter_mut().zip(h.row(i)) {
                *o += self_w * v;
            }
            for &c in g.neighbors(i) {
                let c = c as usize;
                let w = si * inv_sqrt[c];
                for (o, v) in out.iter_mut().zip(&h.data[c * h.f..(c + 1) * h.f]) {
                    *o += w * v;
                }
            }
        }
        h = next;
    }
    Ok(h)
}

/// One CSV row per node, `F` numeric columns; lines starting with `#` or a non-numeric
/// first field (a header) are skipped.
pub fn read_node_features<R: BufRead>(reader: R) -> Result<NodeEmbedding> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        if rows.is_empty() && fields[0].parse::<f64>().is_err() {
            continue;
        }
        let row = fields
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad feature value `{s}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    NodeEmbedding::from_rows(&rows)
}
