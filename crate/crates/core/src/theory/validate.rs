use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;

use super::bounds::{
    alpha_conc, ba_hop_bracket, ba_normalized_from_c, ba_c, latent_bound_from_gap, latent_normalized_from_gap,
    path_normalizer, BoundInputs, BoundValue,
};
use super::generators::{sample_ba_graph, sample_latent_graph, LatentModelParams};
use super::special::WBranch;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::derive_seed;
use crate::sparse::Workspace;

pub const MIN_TRIALS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GraphModel {
    /// Torus geometric graph with a shared radius.
    Latent { n: usize, dim: usize, radius: f64 },
    /// Preferential attachment; `dim` and `steepness` enter only the bound formulas.
    Ba { n: usize, m: usize, dim: usize, steepness: f64 },
}

impl GraphModel {
    pub fn name(&self) -> &'static str {
        match self {
            GraphModel::Latent { .. } => "latent",
            GraphModel::Ba { .. } => "ba",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundKind {
    Unnormalized,
    /// `rho` is the free base of the normalized latent bound.
    Normalized { rho: f64 },
    BaUnnormalized,
    BaNormalized { n_inner: usize, branch: WBranch },
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Unnormalized => "latent_cn",
            BoundKind::Normalized { .. } => "latent_normalized",
            BoundKind::BaUnnormalized => "ba_cn",
            BoundKind::BaNormalized { .. } => "ba_normalized",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationConfig {
    pub model: GraphModel,
    pub kind: BoundKind,
    pub k: usize,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViolationReport {
    pub model: String,
    pub bound: String,
    pub k: usize,
    pub delta: f64,
    pub trials: usize,
    /// Pairs with `eta_2k > 0` whose bound was informative.
    pub eligible: usize,
    pub violations: usize,
    pub mean_slack: Option<f64>,
    pub seed: u64,
}

impl ViolationReport {
    pub fn violation_fraction(&self) -> Option<f64> {
        (self.eligible > 0).then(|| self.violations as f64 / self.eligible as f64)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        if header {
            writeln!(w, "model,bound,k,delta,trials,eligible,violations,mean_slack,seed")?;
        }
        let slack = self.mean_slack.map_or_else(|| "undefined".to_string(), |s| s.to_string());
        writeln!(
            w,
            "{},{},{},{},{},{},{},{slack},{}",
            self.model, self.bound, self.k, self.delta, self.trials, self.eligible, self.violations, self.seed
        )?;
        Ok(())
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    eligible: usize,
    violations: usize,
    slack: f64,
}

fn hops(g: &Graph, s: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    let mut q = VecDeque::from([s]);
    dist[s] = 0;
    while let Some(x) = q.pop_front() {
        for &y in g.neighbors(x) {
            if dist[y as usize] == usize::MAX {
                dist[y as usize] = dist[x] + 1;
                q.push_back(y as usize);
            }
        }
    }
    dist
}

/// Loosest informative latent bound over the unknown split point `M`, radii all equal to `r`.
fn latent_pair_bound(kind: BoundKind, gap: f64, k: usize, dim: usize, r: f64, zeta: f64, n: usize) -> Result<BoundValue> {
    let mut best: Option<f64> = None;
    for m in 1..2 * k {
        let sum_r = (m - 1) as f64 * r;
        let r_max = (2 * k - m) as f64 * r;
        let v = match kind {
            BoundKind::Unnormalized => latent_bound_from_gap(gap, k, dim, sum_r, r_max),
            BoundKind::Normalized { rho } => latent_normalized_from_gap(gap, k, dim, sum_r, r_max, zeta, rho, n)?,
            _ => unreachable!(),
        };
        if let BoundValue::Value(x) = v {
            best = Some(best.map_or(x, |b: f64| b.max(x)));
        }
    }
    Ok(best.map_or(BoundValue::Vacuous, BoundValue::Value))
}

fn check(cfg: &ValidationConfig) -> Result<()> {
    if cfg.trials < MIN_TRIALS {
        return Err(Error::Config(format!("validation needs at least {MIN_TRIALS} trials")));
    }
    if cfg.k < 1 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    match (cfg.model, cfg.kind) {
        (GraphModel::Latent { .. }, BoundKind::Unnormalized | BoundKind::Normalized { .. })
        | (GraphModel::Ba { .. }, BoundKind::BaUnnormalized | BoundKind::BaNormalized { .. }) => Ok(()),
        _ => Err(Error::Config(format!(
            "bound `{}` does not apply to the {} model",
            cfg.kind.name(),
            cfg.model.name()
        ))),
    }
}

fn run_trial(cfg: &ValidationConfig, t: usize) -> Result<Tally> {
    let seed = derive_seed(cfg.seed, 0xb0d, t as u64);
    let k = cfg.k;
    let (g, latent) = match cfg.model {
        GraphModel::Latent { n, dim, radius } => {
            let lg = sample_latent_graph(&LatentModelParams { n, dim, radius, seed })?;
            (lg.graph.clone(), Some(lg))
        }
        GraphModel::Ba { n, m, .. } => (sample_ba_graph(n, m, seed)?, None),
    };
    let n = g.n();
    let mut ws = Workspace::new(n);
    let walks: Vec<_> = (0..n).map(|u| ws.walk_rows(&g, u, 2 * k, None)).collect();
    let degrees: Vec<f64> = (0..n).map(|u| g.degree(u) as f64).collect();
    let mut tally = Tally::default();

    match (cfg.model, latent) {
        (GraphModel::Latent { dim, radius, .. }, Some(lg)) => {
            let alpha = alpha_conc(n, cfg.delta)?;
            let norm = path_normalizer(n, cfg.delta, k)?;
            for i in 0..n {
                for (j, eta) in walks[i][2 * k].iter() {
                    if j <= i || eta <= 0.0 {
                        continue;
                    }
                    let zeta = match cfg.kind {
                        BoundKind::Normalized { .. } => walks[i][k]
                            .hadamard(&walks[j][k])
                            .iter()
                            .map(|(c, _)| degrees[c])
                            .fold(0.0, f64::max),
                        _ => 0.0,
                    };
                    let gap = eta / norm - alpha;
                    if let BoundValue::Value(b) = latent_pair_bound(cfg.kind, gap, k, dim, radius, zeta, n)? {
                        let d = lg.distance(i, j);
                        tally.eligible += 1;
                        tally.slack += b - d;
                        if d > b {
                            tally.violations += 1;
                        }
                    }
                }
            }
        }
        (GraphModel::Ba { m, dim, steepness, .. }, _) => {
            let base = BoundInputs {
                n,
                delta: cfg.delta,
                k,
                dim,
                m,
                steepness,
                max_degree: g.max_degree() as f64,
                ..Default::default()
            };
            let bracket = ba_hop_bracket(&base)?;
            for i in 0..n {
                let h = hops(&g, i);
                for (j, eta) in walks[i][2 * k].iter() {
                    if j <= i || eta <= 0.0 {
                        continue;
                    }
                    let bound = match cfg.kind {
                        BoundKind::BaUnnormalized => Some(2.0 * k as f64 * bracket),
                        BoundKind::BaNormalized { n_inner, branch } => {
                            let zeta = walks[i][k]
                                .hadamard(&walks[j][k])
                                .iter()
                                .map(|(c, _)| degrees[c])
                                .fold(0.0, f64::max);
                            let b = BoundInputs { eta_2k: eta, zeta, ..base.clone() };
                            ba_c(&b)
                                .and_then(|c| ba_normalized_from_c(&b, c, n_inner, branch))
                                .ok()
                        }
                        _ => unreachable!(),
                    };
                    if let Some(b) = bound {
                        let s = h[j] as f64 * bracket;
                        tally.eligible += 1;
                        tally.slack += b - s;
                        if s > b {
                            tally.violations += 1;
                        }
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(tally)
}

/// Samples `trials` graphs and counts pairs whose measured distance exceeds an informative bound.
///
/// Candidate pairs are all pairs joined by at least one walk of length `2k`. Latent pairs
/// are measured by torus distance; preferential-attachment pairs by hop count times the
/// per-hop term of the unnormalized bound.
pub fn validate_bound(cfg: &ValidationConfig) -> Result<ViolationReport> {
    check(cfg)?;
    let tallies: Vec<Tally> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<_>>()?;
    let total = tallies.iter().fold(Tally::default(), |a, b| Tally {
        eligible: a.eligible + b.eligible,
        violations: a.violations + b.violations,
        slack: a.slack + b.slack,
    });
    Ok(ViolationReport {
        model: cfg.model.name().to_string(),
        bound: cfg.kind.name().to_string(),
        k: cfg.k,
        delta: cfg.delta,
        trials: cfg.trials,
        eligible: total.eligible,
        violations: total.violations,
        mean_slack: (total.eligible > 0).then(|| total.slack / total.eligible as f64),
        seed: cfg.seed,
    })
}
