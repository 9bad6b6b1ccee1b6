use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{cn_features, CnOptions, OrderFeatures};
use crate::graph::{Graph, Node, PairBatch};
use crate::sparse::SparseMat;
use crate::state::RunningState;

/// Relative norm below which a residual counts as linearly dependent.
pub const DEGENERATE_TOL: f64 = 1e-12;
pub const FULL_GRAPH_LIMIT: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct OrthoBasis {
    /// `OCN^1..OCN^K`, each of unit Frobenius norm or zero.
    pub orders: Vec<SparseMat>,
    pub degenerate: Vec<bool>,
}

impl OrthoBasis {
    pub fn k_max(&self) -> usize {
        self.orders.len()
    }

    pub fn scale(&mut self, s: f64) {
        for m in &mut self.orders {
            m.scale(s);
        }
    }
}

fn unit(m: &SparseMat, reference: f64) -> (SparseMat, bool) {
    let norm = m.frob_norm();
    if norm <= DEGENERATE_TOL * reference.max(1.0) {
        (SparseMat::zeros(m.nrows(), m.ncols), true)
    } else {
        (m.scaled(1.0 / norm), false)
    }
}

/// Gram-Schmidt over one batch with running inner products.
///
/// In training mode every `xi_hat[(k, i)]` absorbs this batch's `<CN^k, OCN^i>` before the
/// projection; at inference the stored estimates are used as they are.
pub fn gram_schmidt_batch(
    cn: &[SparseMat],
    state: &mut RunningState,
    training: bool,
) -> Result<OrthoBasis> {
    gram_schmidt_batch_scaled(cn, state, training, 1.0)
}

/// As [`gram_schmidt_batch`], multiplying every stored estimate by `xi_scale` when projecting.
///
/// Batch inner products grow like the square root of the batch size, so inference on a batch
/// of size `h` after training on size `h_train` uses `xi_scale = sqrt(h / h_train)`.
pub fn gram_schmidt_batch_scaled(
    cn: &[SparseMat],
    state: &mut RunningState,
    training: bool,
    xi_scale: f64,
) -> Result<OrthoBasis> {
    if cn.is_empty() {
        return Err(Error::Config("need at least one order".into()));
    }
    let mut orders: Vec<SparseMat> = Vec::with_capacity(cn.len());
    let mut degenerate = Vec::with_capacity(cn.len());
    let (first, d) = unit(&cn[0], cn[0].frob_norm());
    orders.push(first);
    degenerate.push(d);
    for k in 2..=cn.len() {
        let ck = &cn[k - 1];
        if training {
            for i in 1..k {
                let xi = ck.frob_dot(&orders[i - 1]);
                let r = state.xi_hat.entry((k, i)).or_default();
                r.update(xi);
                let c = r.count;
                state.bump(c);
            }
        }
        let mut resid = ck.clone();
        for i in 1..k {
            let xi = state.xi(k, i).ok_or_else(|| {
                Error::Config(format!(
                    "no running inner product for orders ({k},{i}); train on a batch first"
                ))
            })?;
            if xi != 0.0 && !degenerate[i - 1] {
                resid = resid.add_scaled(&orders[i - 1], -xi * xi_scale);
            }
        }
        let (u, d) = unit(&resid, ck.frob_norm());
        orders.push(u);
        degenerate.push(d);
    }
    Ok(OrthoBasis { orders, degenerate })
}

pub fn all_pairs(n: usize) -> PairBatch {
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            pairs.push((u as Node, v as Node));
        }
    }
    PairBatch {
        pairs,
        labels: None,
    }
}

/// Exact orthogonalization over every unordered pair of `g`.
pub fn full_graph_orthogonalize(g: &Graph, k_max: usize, opts: &CnOptions) -> Result<OrthoBasis> {
    if g.n() > FULL_GRAPH_LIMIT {
        return Err(Error::Scale(format!(
            "full-graph orthogonalization needs n <= {FULL_GRAPH_LIMIT} (n = {})",
            g.n()
        )));
    }
    let feats = cn_features(g, &all_pairs(g.n()), k_max, opts)?;
    let cn: Vec<SparseMat> = feats.into_iter().map(|f| f.combined).collect();
    gram_schmidt_batch(&cn, &mut RunningState::new(), true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyBasis {
    Chebyshev,
    Monomial,
    Legendre,
}

impl FromStr for PolyBasis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chebyshev" => Ok(PolyBasis::Chebyshev),
            "monomial" => Ok(PolyBasis::Monomial),
            "legendre" => Ok(PolyBasis::Legendre),
            other => Err(Error::Config(format!("unknown polynomial basis `{other}`"))),
        }
    }
}

impl PolyBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            PolyBasis::Chebyshev => "chebyshev",
            PolyBasis::Monomial => "monomial",
            PolyBasis::Legendre => "legendre",
        }
    }

    pub fn eval(self, k: usize, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        if self == PolyBasis::Monomial {
            return x.powi(k as i32);
        }
        let (mut prev, mut cur) = (1.0, x);
        if k == 0 {
            return prev;
        }
        for m in 1..k {
            let next = match self {
                PolyBasis::Chebyshev => 2.0 * x * cur - prev,
                PolyBasis::Legendre => {
                    let m = m as f64;
                    ((2.0 * m + 1.0) * x * cur - m * prev) / (m + 1.0)
                }
                PolyBasis::Monomial => unreachable!(),
            };
            prev = cur;
            cur = next;
        }
        cur
    }
}

pub fn polynomial_weights(basis: PolyBasis, k: usize, x: &[f64]) -> Vec<f64> {
    x.iter().map(|&xi| basis.eval(k, xi)).collect()
}

/// Per-node filter argument `2 d(c) / d_max - 1` in `[-1, 1]`.
pub fn degree_scalars(g: &Graph) -> Vec<f64> {
    let dmax = g.max_degree().max(1) as f64;
    g.degrees()
        .iter()
        .map(|&d| (2.0 * d as f64 / dmax - 1.0).clamp(-1.0, 1.0))
        .collect()
}

pub fn apply_polynomial_filter(feats: &OrderFeatures, weights: &[f64]) -> Result<OrderFeatures> {
    if weights.len() != feats.combined.ncols {
        return Err(Error::Input(format!(
            "weight vector has length {} but features have {} columns",
            weights.len(),
            feats.combined.ncols
        )));
    }
    Ok(feats.map(|m| m.scale_columns(weights)))
}

/// Polynomial-filter replacement for Gram-Schmidt: `OCN^k = CN^k diag(T_k(x))`.
pub fn ocnp_basis(cn: &[SparseMat], basis: PolyBasis, x: &[f64]) -> OrthoBasis {
    let orders: Vec<SparseMat> = cn
        .iter()
        .enumerate()
        .map(|(i, m)| m.scale_columns(&polynomial_weights(basis, i + 1, x)))
        .collect();
    let degenerate = orders.iter().map(|m| m.nnz() == 0).collect();
    OrthoBasis { orders, degenerate }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(d: &[&[f64]]) -> SparseMat {
        SparseMat::from_dense(&d.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn hand_two_by_two() {
        let cn1 = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let cn2 = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let mut st = RunningState::new();
        let b = gram_schmidt_batch(&[cn1, cn2], &mut st, true).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(b.orders[0].to_dense(), vec![vec![s, 0.0], vec![0.0, s]]);
        assert!((st.xi(2, 1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let o2 = b.orders[1].to_dense();
        assert!(o2[0][0].abs() < 1e-15 && (o2[0][1] - s).abs() < 1e-15);
        assert!(b.orders[0].frob_dot(&b.orders[1]).abs() < 1e-15);
    }

    #[test]
    fn dependent_order_is_degenerate() {
        let cn1 = m(&[&[1.0, 2.0], &[0.0, 3.0]]);
        let cn2 = cn1.scaled(7.0);
        let b = gram_schmidt_batch(&[cn1, cn2], &mut RunningState::new(), true).unwrap();
        assert_eq!(b.degenerate, vec![false, true]);
        assert_eq!(b.orders[1].nnz(), 0);
    }

    #[test]
    fn single_order_leaves_state() {
        let mut st = RunningState::new();
        let b = gram_schmidt_batch(&[m(&[&[3.0, 4.0]])], &mut st, true).unwrap();
        let r = &b.orders[0].to_dense()[0];
        assert!((r[0] - 0.6).abs() < 1e-15 && (r[1] - 0.8).abs() < 1e-15);
        assert_eq!(st, RunningState::new());
    }

    #[test]
    fn inference_needs_state() {
        let cn = [m(&[&[1.0]]), m(&[&[1.0]])];
        assert!(gram_schmidt_batch(&cn, &mut RunningState::new(), false).is_err());
    }

    #[test]
    fn full_graph_g4() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
        let b = full_graph_orthogonalize(&g, 2, &CnOptions::default()).unwrap();
        assert!(b.orders[0].frob_dot(&b.orders[1]).abs() <= 1e-10);
        assert!((b.orders[1].frob_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_edge_second_order_degenerate() {
        // Pair (0,1) of K2: CN^1 = CN^2 = [1, 1].
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let b = full_graph_orthogonalize(&g, 2, &CnOptions::default()).unwrap();
        assert_eq!(b.degenerate, vec![false, true]);
        let b = full_graph_orthogonalize(&g, 1, &CnOptions::default()).unwrap();
        assert!((b.orders[0].frob_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polynomials() {
        let x = [0.0, 1.0, -1.0];
        assert_eq!(polynomial_weights(PolyBasis::Chebyshev, 2, &x), vec![-1.0, 1.0, 1.0]);
        assert_eq!(polynomial_weights(PolyBasis::Monomial, 3, &[0.5]), vec![0.125]);
        assert_eq!(polynomial_weights(PolyBasis::Chebyshev, 0, &x), vec![1.0; 3]);
        assert!((PolyBasis::Legendre.eval(2, 0.5) - (-0.125)).abs() < 1e-15);
        assert!("bernstein".parse::<PolyBasis>().is_err());
    }

    #[test]
    fn filter() {
        let f = OrderFeatures {
            order: 1,
            slices: [m(&[&[1.0, 1.0, 1.0, 0.0]]), SparseMat::zeros(1, 4), SparseMat::zeros(1, 4)],
            combined: m(&[&[1.0, 1.0, 1.0, 0.0]]),
        };
        let out = apply_polynomial_filter(&f, &[-1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(out.combined.to_dense(), vec![vec![-1.0, 1.0, 1.0, 0.0]]);
        assert_eq!(apply_polynomial_filter(&f, &[1.0; 4]).unwrap(), f);
        assert_eq!(apply_polynomial_filter(&f, &[0.0; 4]).unwrap().combined.nnz(), 0);
    }
}
