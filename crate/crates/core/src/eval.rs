use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{sample_negatives, Graph, PairBatch, SplitResult};
use crate::rng::derive_seed;

/// Share of positives strictly above the `k`-th best negative.
pub fn hits_at_k(pos: &[f64], neg: &[f64], k: usize) -> Result<f64> {
    if k == 0 || neg.len() < k {
        return Err(Error::Metric(format!(
            "hits@{k} needs at least {k} negatives, have {}",
            neg.len()
        )));
    }
    if pos.is_empty() {
        return Err(Error::Metric("no positives".into()));
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[k - 1];
    Ok(pos.iter().filter(|&&p| p > threshold).count() as f64 / pos.len() as f64)
}

/// Mean reciprocal rank with `rank = 1 + #{neg >= pos}`.
pub fn mrr(per_pos: &[(f64, Vec<f64>)]) -> Result<f64> {
    if per_pos.is_empty() {
        return Err(Error::Metric("no positives".into()));
    }
    let mut total = 0.0;
    for (p, negs) in per_pos {
        if negs.is_empty() {
            return Err(Error::Metric("empty negative set".into()));
        }
        let above = negs.iter().filter(|&&n| n >= *p).count();
        total += 1.0 / (1 + above) as f64;
    }
    Ok(total / per_pos.len() as f64)
}

/// MRR where every positive faces the same negatives.
pub fn mrr_shared(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() {
        return Err(Error::Metric("no positives".into()));
    }
    if neg.is_empty() {
        return Err(Error::Metric("empty negative set".into()));
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let total: f64 = pos
        .iter()
        .map(|&p| {
            let below = sorted.partition_point(|&n| n < p);
            1.0 / (1 + sorted.len() - below) as f64
        })
        .sum();
    Ok(total / pos.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub hits: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub seed: u64,
}

impl EvalReport {
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        if header {
            writeln!(w, "metric,K,value,n_pos,n_neg,seed")?;
        }
        for (k, v) in &self.hits {
            writeln!(w, "hits,{k},{v},{},{},{}", self.n_pos, self.n_neg, self.seed)?;
        }
        writeln!(w, "mrr,,{},{},{},{}", self.mrr, self.n_pos, self.n_neg, self.seed)?;
        Ok(())
    }
}

pub fn evaluate_scores(pos: &[f64], neg: &[f64], ks: &[usize], seed: u64) -> Result<EvalReport> {
    let mut hits = BTreeMap::new();
    for &k in ks {
        hits.insert(k, hits_at_k(pos, neg, k)?);
    }
    Ok(EvalReport {
        hits,
        mrr: mrr_shared(pos, neg)?,
        n_pos: pos.len(),
        n_neg: neg.len(),
        seed,
    })
}

fn score_all<F>(score: &F, batch: &PairBatch) -> Result<Vec<f64>>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let s: Vec<f64> = batch
        .pairs
        .par_iter()
        .map(|&(i, j)| score(i as usize, j as usize))
        .collect();
    if let Some(x) = s.iter().position(|v| !v.is_finite()) {
        let (i, j) = batch.pairs[x];
        return Err(Error::Eval(format!("non-finite score {} for pair ({i},{j})", s[x])));
    }
    Ok(s)
}

pub fn evaluate<F>(score: F, pos: &PairBatch, neg: &PairBatch, ks: &[usize], seed: u64) -> Result<EvalReport>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    if pos.is_empty() {
        return Err(Error::Metric("no positives".into()));
    }
    let p = score_all(&score, pos)?;
    let n = score_all(&score, neg)?;
    evaluate_scores(&p, &n, ks, seed)
}

/// 1:1 seeded negatives for the validation and test parts, drawn from non-edges of the full graph.
pub fn split_negatives(full: &Graph, split: &SplitResult, seed: u64) -> Result<(PairBatch, PairBatch)> {
    let none = Default::default();
    let valid = sample_negatives(full, split.valid.len(), derive_seed(seed, 0x7a11d, 0), &none)?;
    let test = sample_negatives(full, split.test.len(), derive_seed(seed, 0x7e57, 0), &none)?;
    Ok((valid, test))
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
    (m, v.sqrt())
}
