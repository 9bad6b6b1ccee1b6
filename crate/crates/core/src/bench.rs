use std::io::Write;
use std::time::Instant;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::features::{cn_features, CnOptions};
use crate::graph::{Graph, Node, PairBatch};
use crate::orthogonalizer::gram_schmidt_batch;
use crate::rng::{derive_seed, rng};
use crate::scorer::{Pipeline, PipelineConfig};
use crate::state::RunningState;

/// Least-squares line `y = b + c x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub b: f64,
    pub c: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let c = sxy / sxx;
    let b = my - c * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, v)| (v - b - c * a).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(LinearFit { b, c, r2 })
}

/// `t` uniformly random distinct-endpoint pairs.
pub fn random_pairs(n: usize, t: usize, seed: u64) -> PairBatch {
    let mut r = rng(seed);
    let pairs = (0..t)
        .map(|_| loop {
            let (u, v) = (r.gen_range(0..n), r.gen_range(0..n));
            if u != v {
                break (u.min(v) as Node, u.max(v) as Node);
            }
        })
        .collect();
    PairBatch::labeled(pairs, false)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub batch_sizes: Vec<usize>,
    pub pipeline: PipelineConfig,
    /// Repetitions per size; the minimum time is kept.
    pub reps: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            batch_sizes: vec![1024, 4096, 16384, 65536],
            pipeline: PipelineConfig::default(),
            reps: 3,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchPoint {
    pub t: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub points: Vec<BenchPoint>,
    pub fit: Option<LinearFit>,
}

impl BenchReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,seconds")?;
        for p in &self.points {
            writeln!(w, "{},{}", p.t, p.seconds)?;
        }
        if let Some(f) = self.fit {
            writeln!(w, "# fit B={} C={} R2={}", f.b, f.c, f.r2)?;
        }
        Ok(())
    }
}

fn min_time(reps: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        f()?;
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}

/// Wall-clock of one training-mode pipeline pass per batch size.
pub fn run_bench(g: &Graph, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.batch_sizes.is_empty() {
        return Err(Error::Config("no batch sizes".into()));
    }
    let mut points = Vec::with_capacity(cfg.batch_sizes.len());
    for (s, &t) in cfg.batch_sizes.iter().enumerate() {
        let batch = random_pairs(g.n(), t, derive_seed(cfg.seed, 0xbe4c, s as u64));
        let seconds = min_time(cfg.reps, || {
            let mut p = Pipeline::new(cfg.pipeline.clone(), g);
            p.run(g, &batch, true, false).map(|_| ())
        })?;
        points.push(BenchPoint { t, seconds });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.t as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.seconds).collect();
    Ok(BenchReport {
        fit: linear_fit(&xs, &ys),
        points,
    })
}

/// Per-pair seconds of order-`k` features and of orthogonalizing orders `1..=k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderCost {
    pub k: usize,
    pub features_per_pair: f64,
    pub ortho_per_pair: f64,
}

pub fn order_costs(g: &Graph, t: usize, k_max: usize, reps: usize, seed: u64) -> Result<Vec<OrderCost>> {
    let batch = random_pairs(g.n(), t, seed);
    let opts = CnOptions {
        max_order: k_max.max(crate::features::DEFAULT_MAX_ORDER),
        ..Default::default()
    };
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut feats = Vec::new();
        let f = min_time(reps, || {
            feats = cn_features(g, &batch, k, &opts)?;
            Ok(())
        })?;
        let mats: Vec<_> = feats.into_iter().map(|x| x.combined).collect();
        let o = min_time(reps, || gram_schmidt_batch(&mats, &mut RunningState::new(), true).map(|_| ()))?;
        out.push(OrderCost {
            k,
            features_per_pair: f / t as f64,
            ortho_per_pair: o / t as f64,
        });
    }
    Ok(out)
}

pub fn write_order_costs<W: Write>(costs: &[OrderCost], mut w: W) -> Result<()> {
    writeln!(w, "k,features_seconds_per_pair,ortho_seconds_per_pair")?;
    for c in costs {
        writeln!(w, "{},{},{}", c.k, c.features_per_pair, c.ortho_per_pair)?;
    }
    Ok(())
}
