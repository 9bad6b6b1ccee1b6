use std::collections::HashSet;

use rayon::prelude::*;

use super::embed::{propagate_features, FeatureSource, NodeEmbedding};
use super::model::{dot, pair_term, pool, sigmoid, Combine, ScoreModel};
use super::pipeline::{stack, Pipeline, PipelineConfig};
use crate::error::{Error, Result};
use crate::graph::{sample_negatives, Graph, PairBatch, SplitResult};
use crate::rng::derive_seed;
use crate::sparse::SparseMat;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Gradient steps per epoch; negatives are resampled once per epoch.
    pub steps_per_epoch: usize,
    pub lr: f64,
    pub l2: f64,
    pub seed: u64,
    pub depth: usize,
    pub features: FeatureSource,
    pub standardize: bool,
    pub combine: Combine,
    pub pipeline: PipelineConfig,
    /// Training positives are split into this many folds; a fold's pairs read node
    /// features computed with that fold's edges removed. `1` disables masking.
    pub target_folds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            steps_per_epoch: 5,
            lr: 0.1,
            l2: 1e-4,
            seed: 0,
            depth: 1,
            features: FeatureSource::Default { dim: 16, seed: 0 },
            standardize: true,
            combine: Combine::Sum,
            pipeline: PipelineConfig::default(),
            target_folds: 10,
        }
    }
}

/// Precomputed per-pair terms: `g[x] = H_i ⊙ H_j`, `p[x][k] = OCN^{k+1} row · H`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainData {
    pub g: Vec<Vec<f64>>,
    pub p: Vec<Vec<Vec<f64>>>,
    pub y: Vec<f64>,
}

impl TrainData {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

pub fn build_train_data(h: &NodeEmbedding, rows: &[SparseMat], batch: &PairBatch, labels: &[bool]) -> TrainData {
    build_folded(std::slice::from_ref(h), |_| 0, rows, batch, labels)
}

/// As [`build_train_data`], with pair `x` read from embedding `hs[fold(x)]`.
fn build_folded(
    hs: &[NodeEmbedding],
    fold: impl Fn(usize) -> usize + Sync,
    rows: &[SparseMat],
    batch: &PairBatch,
    labels: &[bool],
) -> TrainData {
    let per: Vec<(Vec<f64>, Vec<Vec<f64>>)> = batch
        .pairs
        .par_iter()
        .enumerate()
        .map(|(x, &(i, j))| {
            let h = &hs[fold(x)];
            let g = pair_term(h, i as usize, j as usize);
            let p = rows.iter().map(|m| pool(&m.rows[x], h)).collect();
            (g, p)
        })
        .collect();
    let (g, p) = per.into_iter().unzip();
    TrainData {
        g,
        p,
        y: labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grad {
    pub alpha: Vec<f64>,
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

/// Mean logistic loss plus `l2/2 * (|w|^2 + |alpha|^2)`.
pub fn loss(model: &ScoreModel, data: &TrainData, l2: f64) -> f64 {
    loss_and_grad(model, data, l2).0
}

pub fn loss_and_grad(model: &ScoreModel, data: &TrainData, l2: f64) -> (f64, Grad) {
    let nk = model.alpha.len();
    let zero = || Grad {
        alpha: vec![0.0; nk],
        head_w: vec![0.0; model.head_w.len()],
        head_b: 0.0,
    };
    // Fixed-size chunks keep the reduction order independent of the thread count.
    let parts: Vec<(f64, Grad)> = (0..data.len())
        .collect::<Vec<_>>()
        .par_chunks(256)
        .map(|idx| {
            let mut gr = zero();
            let mut l = 0.0;
            for &x in idx {
                let (g, p, y) = (&data.g[x], &data.p[x], data.y[x]);
                let s = model.logit_from_parts(g, p);
                l += softplus(s) - y * s;
                let r = sigmoid(s) - y;
                gr.head_b += r;
                let f = g.len();
                match model.combine {
                    Combine::Sum => {
                        for d in 0..f {
                            let mut z = g[d];
                            for (a, pk) in model.alpha.iter().zip(p) {
                                z += a * pk[d];
                            }
                            gr.head_w[d] += r * z;
                        }
                        for (k, pk) in p.iter().enumerate().take(nk) {
                            gr.alpha[k] += r * dot(&model.head_w, pk);
                        }
                    }
                    Combine::Concat => {
                        for d in 0..f {
                            gr.head_w[d] += r * g[d];
                        }
                        for (k, pk) in p.iter().enumerate().take(nk) {
                            let wk = &model.head_w[(k + 1) * f..(k + 2) * f];
                            gr.alpha[k] += r * dot(wk, pk);
                            for d in 0..f {
                                gr.head_w[(k + 1) * f + d] += r * model.alpha[k] * pk[d];
                            }
                        }
                    }
                }
            }
            (l, gr)
        })
        .collect();
    let mut total = zero();
    let mut l = 0.0;
    for (pl, pg) in parts {
        l += pl;
        total.head_b += pg.head_b;
        for (a, b) in total.alpha.iter_mut().zip(&pg.alpha) {
            *a += b;
        }
        for (a, b) in total.head_w.iter_mut().zip(&pg.head_w) {
            *a += b;
        }
    }
    let m = data.len().max(1) as f64;
    l /= m;
    total.head_b /= m;
    for a in total.alpha.iter_mut() {
        *a /= m;
    }
    for a in total.head_w.iter_mut() {
        *a /= m;
    }
    let sq: f64 = model.head_w.iter().chain(&model.alpha).map(|x| x * x).sum();
    l += 0.5 * l2 * sq;
    for (gw, w) in total.head_w.iter_mut().zip(&model.head_w) {
        *gw += l2 * w;
    }
    for (ga, a) in total.alpha.iter_mut().zip(&model.alpha) {
        *ga += l2 * a;
    }
    (l, total)
}

pub fn accuracy(model: &ScoreModel, data: &TrainData) -> f64 {
    let hits = (0..data.len())
        .filter(|&x| (model.logit_from_parts(&data.g[x], &data.p[x]) > 0.0) == (data.y[x] > 0.5))
        .count();
    hits as f64 / data.len().max(1) as f64
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub losses: Vec<f64>,
    pub final_accuracy: f64,
}

fn step(model: &mut ScoreModel, g: &Grad, lr: f64) {
    for (a, d) in model.alpha.iter_mut().zip(&g.alpha) {
        *a -= lr * d;
    }
    for (w, d) in model.head_w.iter_mut().zip(&g.head_w) {
        *w -= lr * d;
    }
    model.head_b -= lr * g.head_b;
}

/// Full-batch gradient descent; `data(epoch)` supplies that epoch's batch.
pub fn train_on_data(
    model: &mut ScoreModel,
    mut data: impl FnMut(usize) -> Result<TrainData>,
    epochs: usize,
    steps_per_epoch: usize,
    lr: f64,
    l2: f64,
) -> Result<TrainReport> {
    let mut report = TrainReport::default();
    let mut last = data(0)?;
    for epoch in 0..epochs {
        if epoch > 0 {
            last = data(epoch)?;
        }
        for _ in 0..steps_per_epoch.max(1) {
            let before = model.clone();
            let (l, g) = loss_and_grad(model, &last, l2);
            if !l.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    last_loss: report.losses.last().copied().unwrap_or(f64::NAN),
                    model: Box::new(before),
                });
            }
            report.losses.push(l);
            step(model, &g, lr);
            if !model.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    last_loss: l,
                    model: Box::new(before),
                });
            }
        }
    }
    report.final_accuracy = accuracy(model, &last);
    Ok(report)
}

/// A fitted model with the running statistics and feature recipe needed to score new pairs.
#[derive(Clone, Debug)]
pub struct Trained {
    pub model: ScoreModel,
    pub pipeline: Pipeline,
    pub features: FeatureSource,
    pub standardize: bool,
    pub report: TrainReport,
}

impl Trained {
    pub fn embed(&self, g: &Graph) -> Result<NodeEmbedding> {
        embed(g, &self.features, self.model.depth, self.standardize)
    }

    /// Logits for `batch` scored on `g` in inference mode.
    pub fn score_pairs(&mut self, g: &Graph, batch: &PairBatch) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let h = self.embed(g)?;
        let rows = self.pipeline.run(g, batch, false, false)?;
        let data = build_train_data(&h, &rows, batch, &vec![false; batch.len()]);
        Ok((0..data.len())
            .map(|x| self.model.logit_from_parts(&data.g[x], &data.p[x]))
            .collect())
    }
}

fn embed(g: &Graph, src: &FeatureSource, depth: usize, standardize: bool) -> Result<NodeEmbedding> {
    let x = src.materialize(g)?;
    let mut h = propagate_features(g, &x, depth)?;
    if standardize {
        h.standardize();
    }
    Ok(h)
}

/// Fits `alpha`, head weights and bias on the training positives against resampled negatives.
///
/// Training positives get structural features from the graph with their own edge removed.
pub fn train_model(split: &SplitResult, cfg: &TrainConfig) -> Result<Trained> {
    let g = &split.train_graph;
    let pos = &split.train;
    if pos.len() < 16 {
        return Err(Error::Training(format!(
            "need at least 16 training positives, have {}",
            pos.len()
        )));
    }
    let folds = cfg.target_folds.clamp(1, pos.len());
    let hs: Vec<NodeEmbedding> = if folds == 1 {
        vec![embed(g, &cfg.features, cfg.depth, cfg.standardize)?]
    } else {
        (0..folds)
            .map(|f| {
                let held: HashSet<_> = pos.pairs.iter().skip(f).step_by(folds).copied().collect();
                embed(&g.without_edges(&held), &cfg.features, cfg.depth, cfg.standardize)
            })
            .collect::<Result<_>>()?
    };
    let npos = pos.len();
    // positives and negatives alike take fold x mod folds within their half
    let fold_of = |x: usize| if x < npos { x % folds } else { (x - npos) % folds };
    let mut pipeline = Pipeline::new(cfg.pipeline.clone(), g);
    let pos_feats = pipeline.features(g, pos, true)?;
    let mut model = ScoreModel::new(cfg.pipeline.k_max, cfg.depth, hs[0].f, cfg.pipeline.variant, cfg.combine);
    let no_exclusion = HashSet::new();
    let report = {
        let pipeline = &mut pipeline;
        let hs = &hs;
        train_on_data(
            &mut model,
            |epoch| {
                let neg = sample_negatives(
                    g,
                    pos.len(),
                    derive_seed(cfg.seed, 0x7e9, epoch as u64),
                    &no_exclusion,
                )?;
                let neg_feats = pipeline.features(g, &neg, false)?;
                let rows = pipeline.transform(&stack(&pos_feats, &neg_feats), true)?;
                let batch = pos.concat(&neg);
                let labels: Vec<bool> = (0..batch.len()).map(|x| x < pos.len()).collect();
                Ok(build_folded(hs, fold_of, &rows, &batch, &labels))
            },
            cfg.epochs,
            cfg.steps_per_epoch,
            cfg.lr,
            cfg.l2,
        )?
    };
    Ok(Trained {
        model,
        pipeline,
        features: cfg.features.clone(),
        standardize: cfg.standardize,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::Variant;

    fn toy() -> TrainData {
        let mut d = TrainData::default();
        for x in 0..20 {
            let v = x as f64 / 10.0 - 0.95;
            d.g.push(vec![v, 1.0]);
            d.p.push(vec![vec![0.5 * v, 0.0]]);
            d.y.push(if v > 0.0 { 1.0 } else { 0.0 });
        }
        d
    }

    #[test]
    fn separable_reaches_full_accuracy() {
        let d = toy();
        let mut m = ScoreModel::new(1, 0, 2, Variant::Ocn, Combine::Sum);
        let r = train_on_data(&mut m, |_| Ok(d.clone()), 500, 1, 1.0, 0.0).unwrap();
        assert_eq!(r.final_accuracy, 1.0);
        assert!(r.losses.last().unwrap() < r.losses.first().unwrap());
    }

    #[test]
    fn zero_lr_keeps_parameters() {
        let d = toy();
        let mut m = ScoreModel::new(1, 0, 2, Variant::Ocn, Combine::Sum);
        m.head_w = vec![0.3, -0.2];
        let before = m.clone();
        train_on_data(&mut m, |_| Ok(d.clone()), 10, 1, 0.0, 0.0).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn divergence_reports_last_state() {
        let mut d = toy();
        d.g[0][0] = f64::NAN;
        let mut m = ScoreModel::new(1, 0, 2, Variant::Ocn, Combine::Sum);
        let e = train_on_data(&mut m, |_| Ok(d.clone()), 3, 1, 0.1, 0.0).unwrap_err();
        assert!(matches!(e, Error::Diverged { epoch: 0, .. }));
    }
}
