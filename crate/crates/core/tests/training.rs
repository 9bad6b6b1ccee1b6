mod common;

use hocn::graph::split_edges;
use hocn::rng::rng;
use hocn::scorer::{
    loss, loss_and_grad, train_model, Combine, FeatureSource, ScoreModel, TrainConfig, TrainData, Variant,
};
use rand::Rng;

fn random_data(h: usize, k: usize, f: usize, seed: u64) -> TrainData {
    let mut r = rng(seed);
    let mut v = |s: f64| (r.gen::<f64>() * 2.0 - 1.0) * s;
    let g = (0..h).map(|_| (0..f).map(|_| v(1.0)).collect()).collect();
    let p = (0..h).map(|_| (0..k).map(|_| (0..f).map(|_| v(2.0)).collect()).collect()).collect();
    let y = (0..h).map(|x| (x % 2) as f64).collect();
    TrainData { g, p, y }
}

fn random_model(k: usize, f: usize, combine: Combine, seed: u64) -> ScoreModel {
    let mut r = rng(seed);
    let mut m = ScoreModel::new(k, 1, f, Variant::Ocn, combine);
    for a in &mut m.alpha {
        *a = r.gen::<f64>() * 2.0 - 0.5;
    }
    for w in &mut m.head_w {
        *w = r.gen::<f64>() - 0.5;
    }
    m.head_b = r.gen::<f64>() - 0.5;
    m
}

fn agrees(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-5 * analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central differences over every parameter; returns the worst relative disagreement.
pub fn check_gradients(model: &ScoreModel, data: &TrainData, l2: f64) -> Vec<String> {
    let (_, g) = loss_and_grad(model, data, l2);
    let h = 1e-6;
    let mut bad = Vec::new();
    let mut probe = |name: String, analytic: f64, set: &dyn Fn(&mut ScoreModel, f64)| {
        let (mut up, mut down) = (model.clone(), model.clone());
        set(&mut up, h);
        set(&mut down, -h);
        let numeric = (loss(&up, data, l2) - loss(&down, data, l2)) / (2.0 * h);
        if !agrees(analytic, numeric) {
            bad.push(format!("{name}: analytic {analytic} numeric {numeric}"));
        }
    };
    for i in 0..model.alpha.len() {
        probe(format!("alpha[{i}]"), g.alpha[i], &|m, d| m.alpha[i] += d);
    }
    for i in 0..model.head_w.len() {
        probe(format!("w[{i}]"), g.head_w[i], &|m, d| m.head_w[i] += d);
    }
    probe("b".into(), g.head_b, &|m, d| m.head_b += d);
    bad
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..6 {
        for combine in [Combine::Sum, Combine::Concat] {
            let data = random_data(300, 3, 8, seed);
            let model = random_model(3, 8, combine, 1000 + seed);
            for l2 in [0.0, 1e-3] {
                let bad = check_gradients(&model, &data, l2);
                assert!(bad.is_empty(), "seed {seed} {combine:?} l2={l2}: {bad:?}");
            }
        }
    }
}

fn small_config() -> TrainConfig {
    TrainConfig {
        epochs: 8,
        steps_per_epoch: 3,
        target_folds: 3,
        features: FeatureSource::Default { dim: 8, seed: 4 },
        ..Default::default()
    }
}

#[test]
fn training_is_deterministic_and_thread_count_invariant() {
    let g = common::er(120, 0.06, 12);
    let split = split_edges(&g, (0.7, 0.1, 0.2), 3).unwrap();
    let cfg = small_config();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut t = train_model(&split, &cfg).unwrap();
            let s = t.score_pairs(&split.train_graph, &split.test).unwrap();
            (t.model, t.report.losses, s)
        })
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(3));
}

#[test]
fn ocnp_and_concat_variants_train() {
    let g = common::er(100, 0.08, 5);
    let split = split_edges(&g, (0.7, 0.1, 0.2), 1).unwrap();
    for (variant, combine) in [(Variant::Ocnp, Combine::Sum), (Variant::Ocn, Combine::Concat)] {
        let mut cfg = small_config();
        cfg.pipeline.variant = variant;
        cfg.combine = combine;
        let mut t = train_model(&split, &cfg).unwrap();
        assert!(t.model.is_finite());
        let first = t.report.losses[0];
        let last = *t.report.losses.last().unwrap();
        assert!(last < first, "{variant:?} {combine:?}: {first} -> {last}");
        let s = t.score_pairs(&split.train_graph, &split.valid).unwrap();
        assert!(s.iter().all(|x| x.is_finite()));
    }
}

#[test]
fn model_and_state_survive_a_round_trip() {
    let g = common::er(100, 0.08, 6);
    let split = split_edges(&g, (0.7, 0.1, 0.2), 2).unwrap();
    let mut t = train_model(&split, &small_config()).unwrap();
    let before = t.score_pairs(&split.train_graph, &split.test).unwrap();
    let mut m = Vec::new();
    t.model.write(&mut m).unwrap();
    let mut s = Vec::new();
    t.pipeline.state.write_checkpoint(&mut s).unwrap();
    let mut back = t.clone();
    back.model = ScoreModel::read(&m[..]).unwrap();
    back.pipeline.state = hocn::state::RunningState::read_checkpoint(&s[..]).unwrap();
    assert_eq!(back.model, t.model);
    assert_eq!(back.score_pairs(&split.train_graph, &split.test).unwrap(), before);
}
