//! Heuristic baselines, propagated node features and the linear scoring model.

mod embed;
mod model;
mod pipeline;
mod train;

use std::str::FromStr;

pub use embed::{default_features, propagate_features, read_node_features, FeatureSource, NodeEmbedding};
pub use model::{ocn_score, Combine, ScoreModel, Variant};
pub use pipeline::{Pipeline, PipelineConfig};
pub use train::{
    accuracy, build_train_data, loss, loss_and_grad, train_on_data, train_model, Grad, TrainConfig,
    TrainData, TrainReport, Trained,
};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::normalizer::NormalizedCn;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeuristicKind {
    Cn,
    Aa,
    Ra,
    /// Exact `normalizedCN^k`.
    NormalizedCn(usize),
}

impl FromStr for HeuristicKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "cn" => Ok(HeuristicKind::Cn),
            "aa" => Ok(HeuristicKind::Aa),
            "ra" => Ok(HeuristicKind::Ra),
            _ => {
                let k = s
                    .strip_prefix("normalized_cn_")
                    .or_else(|| s.strip_prefix("ncn"))
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k >= 1);
                k.map(HeuristicKind::NormalizedCn)
                    .ok_or_else(|| Error::Config(format!("unknown heuristic `{s}`")))
            }
        }
    }
}

impl HeuristicKind {
    pub fn name(self) -> String {
        match self {
            HeuristicKind::Cn => "cn".into(),
            HeuristicKind::Aa => "aa".into(),
            HeuristicKind::Ra => "ra".into(),
            HeuristicKind::NormalizedCn(k) => format!("normalized_cn_{k}"),
        }
    }
}

/// Sorted-merge intersection of the two neighbor lists.
pub fn common_neighbors(g: &Graph, i: usize, j: usize) -> Vec<usize> {
    let (a, b) = (g.neighbors(i), g.neighbors(j));
    let (mut x, mut y, mut out) = (0, 0, Vec::new());
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[x] as usize);
                x += 1;
                y += 1;
            }
        }
    }
    out
}

/// Heuristic scorer; the normalized variant caches its participation table.
pub struct Heuristic {
    kind: HeuristicKind,
    ncn: Option<NormalizedCn>,
}

impl Heuristic {
    pub fn new(g: &Graph, kind: HeuristicKind) -> Result<Self> {
        let ncn = match kind {
            HeuristicKind::NormalizedCn(k) => Some(NormalizedCn::new(g, k)?),
            _ => None,
        };
        Ok(Heuristic { kind, ncn })
    }

    pub fn kind(&self) -> HeuristicKind {
        self.kind
    }

    pub fn score(&self, g: &Graph, i: usize, j: usize) -> f64 {
        match self.kind {
            HeuristicKind::Cn => common_neighbors(g, i, j).len() as f64,
            HeuristicKind::Aa => common_neighbors(g, i, j)
                .into_iter()
                .map(|c| {
                    let d = g.degree(c);
                    assert!(d >= 2, "common neighbor {c} has degree {d}");
                    1.0 / (d as f64).ln()
                })
                .fold(0.0, |s, x| s + x),
            HeuristicKind::Ra => common_neighbors(g, i, j)
                .into_iter()
                .map(|c| 1.0 / g.degree(c) as f64)
                .fold(0.0, |s, x| s + x),
            HeuristicKind::NormalizedCn(_) => self.ncn.as_ref().expect("cached").score(g, i, j),
        }
    }
}

pub fn heuristic_score(g: &Graph, (i, j): (usize, usize), kind: HeuristicKind) -> Result<f64> {
    Ok(Heuristic::new(g, kind)?.score(g, i, j))
}
