use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{cn_features, CnOptions};
use crate::graph::{Graph, PairBatch};
use crate::normalizer::{apply_normalization, exact_walk_participation, DEFAULT_EPSILON};
use crate::orthogonalizer::gram_schmidt_batch;
use crate::sparse::{SparseMat, SparseRow};
use crate::state::RunningState;

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() != y.len() || x.is_empty() {
        return None;
    }
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson over all `h * n` entries, zeros included.
pub fn pearson_flat(a: &SparseMat, b: &SparseMat) -> Option<f64> {
    if a.nrows() != b.nrows() || a.ncols != b.ncols {
        return None;
    }
    let n = (a.nrows() * a.ncols) as f64;
    if n == 0.0 {
        return None;
    }
    let sum = |m: &SparseMat| m.rows.iter().map(SparseRow::sum).sum::<f64>();
    let (sa, sb) = (sum(a), sum(b));
    let (ma, mb) = (sa / n, sb / n);
    let saa = a.rows.iter().map(SparseRow::norm_sq).sum::<f64>() - n * ma * ma;
    let sbb = b.rows.iter().map(SparseRow::norm_sq).sum::<f64>() - n * mb * mb;
    let sab = a.frob_dot(b) - n * ma * mb;
    let scale = (a.rows.iter().map(SparseRow::norm_sq).sum::<f64>()
        * b.rows.iter().map(SparseRow::norm_sq).sum::<f64>())
    .sqrt();
    if saa <= 1e-15 * scale.max(1e-300) || sbb <= 1e-15 * scale.max(1e-300) || saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// `K x K` correlation table; `None` marks an order with zero variance.
pub fn order_correlation(mats: &[SparseMat]) -> Vec<Vec<Option<f64>>> {
    let k = mats.len();
    let mut out = vec![vec![None; k]; k];
    for a in 0..k {
        for b in a..k {
            let v = pearson_flat(&mats[a], &mats[b]).map(|v| if a == b { 1.0 } else { v });
            out[a][b] = v;
            out[b][a] = v;
        }
    }
    out
}

/// Population standard deviation over mean; `None` when the mean is not positive.
pub fn coefficient_of_variation(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    if m <= 0.0 {
        return None;
    }
    let v = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    Some(v.sqrt() / m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvAggregation {
    /// CV of each node's total across all pairs.
    PerNodeTotals,
    /// CV across nodes within each pair's row, averaged over pairs with a nonzero row.
    PerPairRow,
}

impl FromStr for CvAggregation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node_totals" | "per_node_totals" => Ok(CvAggregation::PerNodeTotals),
            "pair_row" | "per_pair_row" => Ok(CvAggregation::PerPairRow),
            other => Err(Error::Config(format!("unknown CV aggregation `{other}`"))),
        }
    }
}

impl CvAggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            CvAggregation::PerNodeTotals => "node_totals",
            CvAggregation::PerPairRow => "pair_row",
        }
    }
}

fn row_cv(r: &SparseRow, n: usize) -> Option<f64> {
    let nf = n as f64;
    let m = r.sum() / nf;
    if m <= 0.0 {
        return None;
    }
    let var = (r.norm_sq() / nf - m * m).max(0.0);
    Some(var.sqrt() / m)
}

pub fn feature_cv(m: &SparseMat, agg: CvAggregation) -> Option<f64> {
    match agg {
        CvAggregation::PerNodeTotals => coefficient_of_variation(&m.col_sums()),
        CvAggregation::PerPairRow => {
            let cvs: Vec<f64> = m.rows.iter().filter_map(|r| row_cv(r, m.ncols)).collect();
            if cvs.is_empty() {
                None
            } else {
                Some(cvs.iter().sum::<f64>() / cvs.len() as f64)
            }
        }
    }
}

fn kl_to_mix(p: &[(usize, f64)], q: &[(usize, f64)]) -> (f64, f64) {
    let (mut a, mut b) = (0, 0);
    let (mut kp, mut kq) = (0.0, 0.0);
    while a < p.len() || b < q.len() {
        let ca = p.get(a).map_or(usize::MAX, |x| x.0);
        let cb = q.get(b).map_or(usize::MAX, |x| x.0);
        let (pv, qv) = if ca == cb {
            a += 1;
            b += 1;
            (p[a - 1].1, q[b - 1].1)
        } else if ca < cb {
            a += 1;
            (p[a - 1].1, 0.0)
        } else {
            b += 1;
            (0.0, q[b - 1].1)
        };
        let m = 0.5 * (pv + qv);
        if pv > 0.0 {
            kp += pv * (pv / m).ln();
        }
        if qv > 0.0 {
            kq += qv * (qv / m).ln();
        }
    }
    (kp, kq)
}

fn normalized_abs(r: &SparseRow) -> Option<Vec<(usize, f64)>> {
    let s: f64 = r.val.iter().map(|x| x.abs()).sum();
    if s <= 0.0 {
        return None;
    }
    Some(r.iter().filter(|&(_, x)| x != 0.0).map(|(c, x)| (c, x.abs() / s)).collect())
}

/// Jensen-Shannon divergence (natural log) of two non-negative rows after normalization.
/// Entries enter by absolute value; `None` if either row sums to zero.
pub fn jsd(p: &SparseRow, q: &SparseRow) -> Option<f64> {
    let (p, q) = (normalized_abs(p)?, normalized_abs(q)?);
    let (kp, kq) = kl_to_mix(&p, &q);
    Some((0.5 * (kp + kq)).clamp(0.0, std::f64::consts::LN_2))
}

pub fn edge_jsd(p_rows: &SparseMat, q_rows: &SparseMat) -> Vec<Option<f64>> {
    p_rows
        .rows
        .par_iter()
        .zip(&q_rows.rows)
        .map(|(p, q)| jsd(p, q))
        .collect()
}

pub fn mean_defined(xs: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = xs.iter().flatten().copied().collect();
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Correlation and order-1 vs order-2 JSD before and after exact batch orthogonalization.
#[derive(Clone, Debug)]
pub struct RedundancyReport {
    pub corr_raw: Vec<Vec<Option<f64>>>,
    pub corr_orth: Vec<Vec<Option<f64>>>,
    pub jsd_before: Vec<Option<f64>>,
    pub jsd_after: Vec<Option<f64>>,
}

pub fn redundancy_report(g: &Graph, batch: &PairBatch, k_max: usize, opts: &CnOptions) -> Result<RedundancyReport> {
    if k_max < 2 {
        return Err(Error::Config("redundancy needs at least two orders".into()));
    }
    let cn: Vec<SparseMat> = cn_features(g, batch, k_max, opts)?
        .into_iter()
        .map(|f| f.combined)
        .collect();
    let basis = gram_schmidt_batch(&cn, &mut RunningState::new(), true)?;
    Ok(RedundancyReport {
        corr_raw: order_correlation(&cn),
        corr_orth: order_correlation(&basis.orders),
        jsd_before: edge_jsd(&cn[0], &cn[1]),
        jsd_after: edge_jsd(&basis.orders[0], &basis.orders[1]),
    })
}

/// Raw and exactly normalized CV at order `k` over `batch`.
pub fn cv_report(
    g: &Graph,
    batch: &PairBatch,
    k: usize,
    opts: &CnOptions,
    agg: CvAggregation,
) -> Result<(Option<f64>, Option<f64>)> {
    let feats = cn_features(g, batch, k, opts)?.pop().expect("k >= 1");
    let p = exact_walk_participation(g, k, opts.exclude_endpoints)?;
    let norm = apply_normalization(&feats, &p, DEFAULT_EPSILON)?;
    Ok((feature_cv(&feats.combined, agg), feature_cv(&norm.combined, agg)))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

pub fn write_correlation<W: Write>(corr: &[Vec<Option<f64>>], variant: &str, mut w: W, header: bool) -> Result<()> {
    if header {
        writeln!(w, "order_a,order_b,pearson,variant")?;
    }
    for (a, row) in corr.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            writeln!(w, "{},{},{},{variant}", a + 1, b + 1, opt(*v))?;
        }
    }
    Ok(())
}

pub fn write_cv_row<W: Write>(mut w: W, order: usize, variant: &str, cv: Option<f64>) -> Result<()> {
    writeln!(w, "{order},{variant},{}", opt(cv))?;
    Ok(())
}

pub fn write_jsd<W: Write>(before: &[Option<f64>], after: &[Option<f64>], mut w: W) -> Result<()> {
    writeln!(w, "edge_index,jsd_before,jsd_after")?;
    for (e, (b, a)) in before.iter().zip(after).enumerate() {
        writeln!(w, "{e},{},{}", opt(*b), opt(*a))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_examples() {
        let a = SparseMat::from_dense(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 1.0]]);
        let c = order_correlation(&[a.clone(), a.scaled(3.0)]);
        assert!((c[0][1].unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(c[0][0], Some(1.0));
        let x = SparseMat::from_dense(&[vec![1.0, 2.0, 3.0]]);
        let y = SparseMat::from_dense(&[vec![3.0, 2.0, 1.0]]);
        assert!((pearson_flat(&x, &y).unwrap() + 1.0).abs() < 1e-12);
        let z = SparseMat::from_dense(&[vec![2.0, 2.0, 2.0]]);
        assert_eq!(order_correlation(&[x, z])[0][1], None);
    }

    #[test]
    fn cv_examples() {
        assert_eq!(coefficient_of_variation(&[2.0, 2.0, 2.0]), Some(0.0));
        assert_eq!(coefficient_of_variation(&[1.0, 3.0]), Some(0.5));
        assert_eq!(coefficient_of_variation(&[0.0, 0.0]), None);
        let m = SparseMat::from_dense(&[vec![1.0, 1.0], vec![0.0, 2.0]]);
        assert_eq!(feature_cv(&m, CvAggregation::PerNodeTotals), Some(0.5));
        assert_eq!(feature_cv(&m, CvAggregation::PerPairRow), Some(0.5));
    }

    #[test]
    fn jsd_examples() {
        let r = |d: &[f64]| SparseRow::from_dense(d);
        assert_eq!(jsd(&r(&[0.3, 0.7]), &r(&[0.3, 0.7])), Some(0.0));
        assert!((jsd(&r(&[1.0, 0.0]), &r(&[0.0, 1.0])).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((jsd(&r(&[0.5, 0.5]), &r(&[1.0, 0.0])).unwrap() - 0.2158).abs() < 1e-4);
        assert_eq!(jsd(&r(&[0.0, 0.0]), &r(&[1.0, 0.0])), None);
        assert_eq!(jsd(&r(&[-1.0, 1.0]), &r(&[1.0, 1.0])), Some(0.0));
    }
}
