use rand::Rng as _;

use super::special::unit_ball_volume;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatentModelParams {
    pub n: usize,
    pub dim: usize,
    pub radius: f64,
    pub seed: u64,
}

impl LatentModelParams {
    /// `(1 / V(1))^(1/D)`.
    pub fn r_max(dim: usize) -> f64 {
        unit_ball_volume(dim).powf(-1.0 / dim as f64)
    }

    /// Radius whose ball holds `degree / n` of the unit torus.
    pub fn radius_for_degree(n: usize, dim: usize, degree: f64) -> f64 {
        (degree / (n as f64 * unit_ball_volume(dim))).powf(1.0 / dim as f64)
    }

    pub fn expected_degree(&self) -> f64 {
        self.n as f64 * unit_ball_volume(self.dim) * self.radius.powi(self.dim as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.dim < 1 {
            return Err(Error::Config("latent model needs N >= 2 and D >= 1".into()));
        }
        let r_max = Self::r_max(self.dim);
        if !(self.radius > 0.0 && self.radius < r_max) {
            return Err(Error::Config(format!(
                "latent radius {} outside (0, {r_max})",
                self.radius
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LatentGraph {
    pub graph: Graph,
    /// Row-major `n x dim` coordinates in `[0, 1)`.
    pub positions: Vec<f64>,
    pub dim: usize,
}

impl LatentGraph {
    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// Wrap-around Euclidean distance.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        torus_distance(self.position(i), self.position(j))
    }
}

pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            let d = d.min(1.0 - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Hard-threshold geometric graph on the unit torus: edge iff distance <= r.
pub fn sample_latent_graph(p: &LatentModelParams) -> Result<LatentGraph> {
    p.validate()?;
    let mut r = rng(p.seed);
    let positions: Vec<f64> = (0..p.n * p.dim).map(|_| r.gen::<f64>()).collect();
    let d = p.dim;
    let mut edges = Vec::new();
    for i in 0..p.n {
        let a = &positions[i * d..(i + 1) * d];
        for j in i + 1..p.n {
            if torus_distance(a, &positions[j * d..(j + 1) * d]) <= p.radius {
                edges.push((i, j));
            }
        }
    }
    Ok(LatentGraph {
        graph: Graph::from_edges(p.n, edges)?,
        positions,
        dim: d,
    })
}

/// Preferential attachment: each arrival links to `min(m, arrivals so far)` distinct earlier
/// nodes, drawn proportionally to current degree (repeat draws are redrawn).
pub fn sample_ba_graph(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if m < 1 || n <= m {
        return Err(Error::Config(format!("BA graph needs N > m >= 1, got N={n}, m={m}")));
    }
    let mut r = rng(seed);
    // each endpoint appears once per incident edge, so a uniform pick is degree-proportional
    let mut ends: Vec<usize> = Vec::with_capacity(2 * m * n);
    let mut edges = Vec::with_capacity(m * n);
    edges.push((0, 1));
    ends.extend([0, 1]);
    let mut picked = Vec::with_capacity(m);
    for v in 2..n {
        picked.clear();
        while picked.len() < m.min(v) {
            let w = ends[r.gen_range(0..ends.len())];
            if !picked.contains(&w) {
                picked.push(w);
            }
        }
        for &w in &picked {
            edges.push((w, v));
            ends.push(w);
            ends.push(v);
        }
    }
    Graph::from_edges(n, edges)
}

/// Uniform random graph with exactly `m` distinct edges.
pub fn sample_gnm(n: usize, m: usize, seed: u64) -> Result<Graph> {
    let max = n.saturating_mul(n.saturating_sub(1)) / 2;
    if m > max || n < 2 {
        return Err(Error::Config(format!("cannot place {m} edges on {n} nodes")));
    }
    let mut r = rng(seed);
    let mut seen = std::collections::HashSet::with_capacity(m);
    while seen.len() < m {
        let (u, v) = (r.gen_range(0..n), r.gen_range(0..n));
        if u != v {
            seen.insert((u.min(v), u.max(v)));
        }
    }
    let mut edges: Vec<_> = seen.into_iter().collect();
    edges.sort_unstable();
    Graph::from_edges(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ba_small_cases() {
        let g = sample_ba_graph(3, 1, 7).unwrap();
        assert_eq!(g.num_edges(), 2);
        for seed in 0..20 {
            let g = sample_ba_graph(300, 3, seed).unwrap();
            assert_eq!(g.num_edges(), 1 + 2 + 3 * 297);
            assert!((3..300).all(|v| g.degree(v) >= 3));
        }
        assert!(sample_ba_graph(3, 3, 0).is_err());
    }

    #[test]
    fn latent_radius_limits() {
        assert!((LatentModelParams::r_max(2) - 0.5642).abs() < 1e-4);
        let p = LatentModelParams { n: 50, dim: 2, radius: 1e-9, seed: 3 };
        assert_eq!(sample_latent_graph(&p).unwrap().graph.num_edges(), 0);
        let bad = LatentModelParams { radius: 0.6, ..p };
        assert!(sample_latent_graph(&bad).is_err());
    }

    #[test]
    fn gnm_edge_count() {
        assert_eq!(sample_gnm(100, 250, 1).unwrap().num_edges(), 250);
        assert_eq!(sample_gnm(4, 6, 1).unwrap().num_edges(), 6);
        assert!(sample_gnm(4, 7, 1).is_err());
    }

    #[test]
    fn torus_wraps() {
        assert!((torus_distance(&[0.05, 0.5], &[0.95, 0.5]) - 0.1).abs() < 1e-12);
    }
}
