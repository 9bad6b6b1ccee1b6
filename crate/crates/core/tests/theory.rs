mod common;

use hocn::rng::derive_seed;
use hocn::theory::{
    sample_ba_graph, sample_latent_graph, validate_bound, BoundKind, GraphModel, LatentModelParams, ValidationConfig,
};

fn latent(n: usize, dim: usize, degree: f64, seed: u64) -> LatentModelParams {
    LatentModelParams {
        n,
        dim,
        radius: LatentModelParams::radius_for_degree(n, dim, degree),
        seed,
    }
}

#[test]
fn latent_degree_matches_ball_volume() {
    for (dim, degree) in [(1, 10.0), (2, 12.0), (3, 20.0)] {
        let mut total = 0.0;
        let samples = 20;
        for s in 0..samples {
            let p = latent(400, dim, degree, derive_seed(7, dim as u64, s));
            let g = sample_latent_graph(&p).unwrap().graph;
            total += 2.0 * g.num_edges() as f64 / g.n() as f64;
        }
        let mean = total / samples as f64;
        let expect = degree * 399.0 / 400.0;
        assert!((mean - expect).abs() < 0.03 * expect, "D={dim}: mean degree {mean} vs {expect}");
    }
}

#[test]
fn latent_edges_are_exactly_the_close_pairs() {
    let lg = sample_latent_graph(&latent(120, 2, 8.0, 3)).unwrap();
    let r = latent(120, 2, 8.0, 3).radius;
    for i in 0..120 {
        for j in i + 1..120 {
            assert_eq!(lg.graph.has_edge(i, j), lg.distance(i, j) <= r, "({i},{j})");
        }
    }
}

#[test]
fn max_degree_concentration() {
    let (n, delta, samples) = (300usize, 0.1f64, 500u64);
    let p0 = latent(n, 2, 10.0, 0);
    let mu = p0.expected_degree() * (n - 1) as f64 / n as f64;
    let literal = n as f64 * (1.0 + (-3.0 * delta.ln() / n as f64).sqrt());
    let per_node = mu * (1.0 + (-3.0 * delta.ln() / mu).sqrt());
    let (mut above_literal, mut nodes_above, mut nodes) = (0u64, 0u64, 0u64);
    for s in 0..samples {
        let g = sample_latent_graph(&LatentModelParams { seed: derive_seed(11, 0, s), ..p0 }).unwrap().graph;
        if g.max_degree() as f64 > literal {
            above_literal += 1;
        }
        for u in 0..n {
            nodes += 1;
            if g.degree(u) as f64 > per_node {
                nodes_above += 1;
            }
        }
    }
    assert!(above_literal as f64 / samples as f64 <= delta);
    let frac = nodes_above as f64 / nodes as f64;
    assert!(frac <= delta, "per-node exceedance {frac}");
}

/// Discrete power-law exponent by maximum likelihood over the tail `d >= d_min`.
fn tail_exponent(degrees: &[usize], d_min: usize) -> f64 {
    let tail: Vec<f64> = degrees.iter().filter(|&&d| d >= d_min).map(|&d| d as f64).collect();
    let s: f64 = tail.iter().map(|d| (d / (d_min as f64 - 0.5)).ln()).sum();
    1.0 + tail.len() as f64 / s
}

#[test]
fn preferential_attachment_tail() {
    for seed in 0..3 {
        let g = sample_ba_graph(20_000, 3, seed).unwrap();
        let deg: Vec<usize> = (0..g.n()).map(|u| g.degree(u)).collect();
        assert!(deg[3..].iter().all(|&d| d >= 3));
        let gamma = tail_exponent(&deg, 10);
        assert!((2.5..3.5).contains(&gamma), "seed {seed}: exponent {gamma}");
        let mean = 2.0 * g.num_edges() as f64 / g.n() as f64;
        assert!((mean - 6.0).abs() < 0.05, "mean degree {mean}");
    }
}

fn config(model: GraphModel, kind: BoundKind, k: usize) -> ValidationConfig {
    ValidationConfig {
        model,
        kind,
        k,
        delta: 0.1,
        trials: 100,
        seed: 5,
    }
}

#[test]
fn validation_is_deterministic_across_thread_counts() {
    let model = GraphModel::Latent {
        n: 150,
        dim: 2,
        radius: LatentModelParams::radius_for_degree(150, 2, 16.0),
    };
    let cfg = config(model, BoundKind::Unnormalized, 1);
    let run = |t: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
        pool.install(|| validate_bound(&cfg).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert!(a.eligible > 0);
    let mut csv = Vec::new();
    a.write_csv(&mut csv, true).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("model,bound,k,delta,trials,eligible,violations,mean_slack,seed\nlatent,latent_cn,1,0.1,100,"));
}

#[test]
fn validation_rejects_too_few_trials() {
    let model = GraphModel::Ba { n: 50, m: 2, dim: 2, steepness: 1.0 };
    let mut cfg = config(model, BoundKind::BaUnnormalized, 1);
    cfg.trials = 99;
    assert!(matches!(validate_bound(&cfg), Err(hocn::Error::Config(_))));
}

#[test]
fn preferential_attachment_unnormalized_bound_holds() {
    let model = GraphModel::Ba { n: 80, m: 2, dim: 2, steepness: 1.0 };
    let r = validate_bound(&config(model, BoundKind::BaUnnormalized, 1)).unwrap();
    assert!(r.eligible > 0);
    assert_eq!(r.violations, 0);
}
