use crate::error::{Error, Result};
use crate::features::{cn_features, CnOptions, OrderFeatures};
use crate::graph::{Graph, PairBatch};
use crate::normalizer::{inverse_weights, running_participation, update_running_participation, DEFAULT_EPSILON};
use crate::orthogonalizer::{degree_scalars, gram_schmidt_batch_scaled, ocnp_basis, PolyBasis};
use crate::sparse::SparseMat;
use crate::state::RunningState;

use super::model::Variant;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub k_max: usize,
    pub variant: Variant,
    pub normalize: bool,
    pub basis: PolyBasis,
    pub cn: CnOptions,
    pub epsilon: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_max: 2,
            variant: Variant::Ocn,
            normalize: true,
            basis: PolyBasis::Chebyshev,
            cn: CnOptions::default(),
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Batch transform: counts, optional running normalization, then orthogonalization or filtering.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub state: RunningState,
    filter_x: Vec<f64>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, g: &Graph) -> Self {
        Self::with_state(cfg, g, RunningState::new())
    }

    pub fn with_state(cfg: PipelineConfig, g: &Graph, state: RunningState) -> Self {
        Pipeline {
            filter_x: degree_scalars(g),
            cfg,
            state,
        }
    }

    pub fn features(&self, g: &Graph, batch: &PairBatch, remove_target: bool) -> Result<Vec<OrderFeatures>> {
        let opts = CnOptions {
            remove_target,
            ..self.cfg.cn
        };
        cn_features(g, batch, self.cfg.k_max, &opts)
    }

    /// Per-order structural rows, scaled so row magnitudes do not depend on batch size.
    ///
    /// `OCN^k` has unit Frobenius norm over the batch, so its rows are multiplied by
    /// `sqrt(h)`. Filtered orders are brought to the same scale; the per-order constant
    /// this removes is absorbed by `alpha_k`.
    pub fn transform(&mut self, feats: &[OrderFeatures], training: bool) -> Result<Vec<SparseMat>> {
        let h = feats.first().map_or(0, OrderFeatures::nrows);
        if training {
            self.state.batch_size.update(h as f64);
        }
        let mut mats = Vec::with_capacity(feats.len());
        for f in feats {
            if !self.cfg.normalize {
                mats.push(f.combined.clone());
                continue;
            }
            if training {
                update_running_participation(&mut self.state, f);
            } else if !self.state.psi_hat.contains_key(&f.order) {
                return Err(Error::Config(format!(
                    "no running participation for order {}; train first",
                    f.order
                )));
            }
            let p = running_participation(&self.state, f.order, f.combined.ncols);
            let w = inverse_weights(&p.counts, self.cfg.epsilon, true);
            mats.push(f.combined.scale_columns(&w));
        }
        let h_train = self.state.batch_size.value.max(1.0);
        let rows = match self.cfg.variant {
            Variant::Ocn => {
                let xi_scale = if training { 1.0 } else { (h as f64 / h_train).sqrt() };
                let mut b = gram_schmidt_batch_scaled(&mats, &mut self.state, training, xi_scale)?;
                b.scale((h as f64).sqrt());
                b.orders
            }
            Variant::Ocnp => {
                let mut b = ocnp_basis(&mats, self.cfg.basis, &self.filter_x);
                for m in &mut b.orders {
                    let norm = m.frob_norm();
                    if norm > 0.0 {
                        m.scale((h as f64).sqrt() / norm);
                    }
                }
                b.orders
            }
        };
        Ok(rows)
    }

    pub fn run(
        &mut self,
        g: &Graph,
        batch: &PairBatch,
        training: bool,
        remove_target: bool,
    ) -> Result<Vec<SparseMat>> {
        let feats = self.features(g, batch, remove_target)?;
        self.transform(&feats, training)
    }
}

/// Row-wise concatenation of two feature batches of the same orders.
pub(crate) fn stack(a: &[OrderFeatures], b: &[OrderFeatures]) -> Vec<OrderFeatures> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let cat = |p: &SparseMat, q: &SparseMat| {
                let mut m = p.clone();
                m.rows.extend(q.rows.iter().cloned());
                m
            };
            OrderFeatures {
                order: x.order,
                slices: [
                    cat(&x.slices[0], &y.slices[0]),
                    cat(&x.slices[1], &y.slices[1]),
                    cat(&x.slices[2], &y.slices[2]),
                ],
                combined: cat(&x.combined, &y.combined),
            }
        })
        .collect()
}
