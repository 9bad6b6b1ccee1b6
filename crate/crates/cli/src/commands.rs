use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use hocn::bench::{order_costs, run_bench, write_order_costs, BenchConfig};
use hocn::diagnostics::{cv_report, redundancy_report, write_correlation, write_cv_row, write_jsd, CvAggregation};
use hocn::eval::{evaluate_scores, mean_std, split_negatives, EvalReport};
use hocn::features::CnOptions;
use hocn::graph::{
    load_edge_list, load_edge_list_remapped, read_split_manifest, sample_negatives, split_edges, write_id_map,
    write_split_manifest, EdgeFormat, Graph, Node, PairBatch, SplitResult,
};
use hocn::rng::derive_seed;
use hocn::scorer::{
    train_model, Combine, FeatureSource, Heuristic, HeuristicKind, Pipeline, PipelineConfig, ScoreModel, TrainConfig,
    Trained,
};
use hocn::state::RunningState;
use hocn::theory::bounds::{
    alpha_conc, ba_normalized_from_c, ba_c, latent_bound_from_gap, latent_normalized_from_gap, BoundInputs,
};
use hocn::theory::{
    ba_bound_unnormalized, sample_gnm, validate_bound, BoundKind, BoundValue, GraphModel, LatentModelParams,
    ValidationConfig, WBranch,
};

use crate::config::Settings;
use crate::output::Report;
use crate::{Cli, CliError, Command, GlobalArgs};

type Res<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn open(path: &Path) -> Res<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Runtime(hocn::Error::Input(format!("cannot open {}: {e}", path.display()))))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Res<Vec<T>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse().map_err(|_| usage(format!("bad {what} `{x}`"))))
        .collect()
}

fn parse_range(s: &str) -> Res<Vec<usize>> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| usage(format!("expected a..b, got `{s}`")))?;
    let a: usize = a.trim().parse().map_err(|_| usage(format!("bad range `{s}`")))?;
    let b: usize = b.trim().parse().map_err(|_| usage(format!("bad range `{s}`")))?;
    if a > b {
        return Err(usage(format!("empty range `{s}`")));
    }
    Ok((a..=b).collect())
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Edge list: two ids per line, whitespace or comma separated.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// tsv or csv; guessed from the extension by default.
    #[arg(long)]
    pub format: Option<String>,
    /// Map arbitrary external ids to 0..n in ascending order.
    #[arg(long)]
    pub remap: bool,
}

impl GraphArgs {
    fn load(&self) -> Res<(Graph, Option<Vec<u64>>)> {
        let path = self.input.as_ref().ok_or_else(|| usage("--input is required"))?;
        let format = match &self.format {
            Some(f) => f.parse().map_err(|e: hocn::Error| usage(e.to_string()))?,
            None => EdgeFormat::from_path(path),
        };
        let loaded = if self.remap {
            load_edge_list_remapped(open(path)?, format)?
        } else {
            load_edge_list(open(path)?, format)?
        };
        Ok((loaded.graph, loaded.ids))
    }
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Split manifest written by `prepare`; replaces --input.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value = "0.7,0.1,0.2")]
    pub ratios: String,
}

fn parse_ratios(s: &str) -> Res<(f64, f64, f64)> {
    let r: Vec<f64> = parse_list(s, "ratio")?;
    match r[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(usage("--ratios needs three values")),
    }
}

impl DataArgs {
    /// Full graph and split; `seed` drives the split when reading an edge list.
    fn load(&self, seed: u64) -> Res<(Graph, SplitResult)> {
        if let Some(m) = &self.manifest {
            let split = read_split_manifest(open(m)?)?;
            let extra = split.valid.pairs.iter().chain(&split.test.pairs);
            let full = split
                .train_graph
                .union_edges(extra.map(|&(u, v)| (u as usize, v as usize)));
            return Ok((full, split));
        }
        let (g, _) = self.graph.load()?;
        let split = split_edges(&g, parse_ratios(&self.ratios)?, seed)?;
        Ok((g, split))
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct HyperArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub steps_per_epoch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Feature propagation depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Random projection width of the default node features.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub feature_seed: Option<u64>,
    /// sum or concat
    #[arg(long)]
    pub combine: Option<String>,
    /// chebyshev, monomial or legendre (ocnp only)
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long)]
    pub target_folds: Option<usize>,
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub no_standardize: bool,
}

impl HyperArgs {
    fn apply(&self, s: &mut Settings) {
        s.set_opt("epochs", self.epochs);
        s.set_opt("steps_per_epoch", self.steps_per_epoch);
        s.set_opt("lr", self.lr);
        s.set_opt("l2", self.l2);
        s.set_opt("depth", self.depth);
        s.set_opt("dim", self.dim);
        s.set_opt("feature_seed", self.feature_seed);
        s.set_opt("combine", self.combine.clone());
        s.set_opt("basis", self.basis.clone());
        s.set_opt("target_folds", self.target_folds);
        if self.no_normalize {
            s.set("normalize", false);
        }
        if self.no_standardize {
            s.set("standardize", false);
        }
    }
}

fn settings(g: &GlobalArgs) -> Res<Settings> {
    let mut s = Settings::with_defaults();
    if let Some(p) = &g.config {
        s.load_file(p)?;
    }
    s.set_opt("seed", g.seed);
    s.set_opt("k_max", g.k_max);
    s.set_opt("variant", g.variant.clone());
    s.set_opt("threads", g.threads);
    if g.exclude_endpoints {
        s.set("exclude_endpoints", true);
    }
    if g.use_valid_as_input {
        s.set("use_valid_as_input", true);
    }
    Ok(s)
}

fn enum_setting<T: std::str::FromStr<Err = hocn::Error>>(s: &Settings, key: &str) -> Res<T> {
    s.raw(key).parse().map_err(|e: hocn::Error| usage(e.to_string()))
}

fn pipeline_config(s: &Settings) -> Res<PipelineConfig> {
    Ok(PipelineConfig {
        k_max: s.get("k_max")?,
        variant: enum_setting(s, "variant")?,
        normalize: s.get("normalize")?,
        basis: enum_setting(s, "basis")?,
        cn: CnOptions {
            exclude_endpoints: s.get("exclude_endpoints")?,
            ..Default::default()
        },
        epsilon: s.get("epsilon")?,
    })
}

fn train_config(s: &Settings) -> Res<TrainConfig> {
    Ok(TrainConfig {
        epochs: s.get("epochs")?,
        steps_per_epoch: s.get("steps_per_epoch")?,
        lr: s.get("lr")?,
        l2: s.get("l2")?,
        seed: s.get("seed")?,
        depth: s.get("depth")?,
        features: FeatureSource::Default {
            dim: s.get("dim")?,
            seed: s.get("feature_seed")?,
        },
        standardize: s.get("standardize")?,
        combine: enum_setting::<Combine>(s, "combine")?,
        pipeline: pipeline_config(s)?,
        target_folds: s.get("target_folds")?,
    })
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut os = p.as_os_str().to_owned();
    os.push(suffix);
    PathBuf::from(os)
}

fn save_trained(t: &Trained, s: &Settings, path: &Path) -> Res<()> {
    let io = |e: std::io::Error| CliError::Runtime(e.into());
    t.model.write(File::create(path).map_err(io)?)?;
    t.pipeline
        .state
        .write_checkpoint(File::create(with_suffix(path, ".state")).map_err(io)?)?;
    std::fs::write(with_suffix(path, ".meta"), s.to_text()).map_err(io)?;
    Ok(())
}

fn load_trained(path: &Path, g: &Graph) -> Res<Trained> {
    let model = ScoreModel::read(open(path)?)?;
    let state = RunningState::read_checkpoint(open(&with_suffix(path, ".state"))?)?;
    let mut meta = Settings::with_defaults();
    meta.load_file(&with_suffix(path, ".meta"))?;
    let cfg = train_config(&meta)?;
    if cfg.pipeline.k_max != model.k_max || cfg.pipeline.variant != model.variant {
        return Err(usage(format!("{} does not match its meta file", path.display())));
    }
    Ok(Trained {
        model,
        pipeline: Pipeline::with_state(cfg.pipeline, g, state),
        features: cfg.features,
        standardize: cfg.standardize,
        report: Default::default(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Part {
    Train,
    Valid,
    Test,
}

fn parse_part(s: &str) -> Res<Part> {
    match s {
        "train" => Ok(Part::Train),
        "valid" => Ok(Part::Valid),
        "test" => Ok(Part::Test),
        other => Err(usage(format!("unknown split part `{other}`"))),
    }
}

/// Graph that features for `part` are read from.
fn part_graph(split: &SplitResult, part: Part, use_valid: bool) -> Graph {
    match part {
        Part::Test => split.inference_graph(use_valid),
        _ => split.train_graph.clone(),
    }
}

fn part_pairs(full: &Graph, split: &SplitResult, part: Part, seed: u64) -> Res<(PairBatch, PairBatch)> {
    Ok(match part {
        Part::Train => {
            let neg = sample_negatives(full, split.train.len(), derive_seed(seed, 0x7ea1, 0), &Default::default())?;
            (split.train.clone(), neg)
        }
        Part::Valid => (split.valid.clone(), split_negatives(full, split, seed)?.0),
        Part::Test => (split.test.clone(), split_negatives(full, split, seed)?.1),
    })
}

enum Scorer {
    Heuristic(Heuristic),
    Model(Box<Trained>),
}

impl Scorer {
    fn scores(&mut self, g: &Graph, batch: &PairBatch) -> Res<Vec<f64>> {
        match self {
            Scorer::Heuristic(h) => {
                use rayon::prelude::*;
                Ok(batch
                    .pairs
                    .par_iter()
                    .map(|&(i, j)| h.score(g, i as usize, j as usize))
                    .collect())
            }
            Scorer::Model(t) => Ok(t.score_pairs(g, batch)?),
        }
    }
}

fn check_kind(kind: &str) -> Res<()> {
    if !matches!(kind, "model" | "ocn" | "ocnp" | "fit") {
        kind.parse::<HeuristicKind>().map_err(|e| usage(e.to_string()))?;
    }
    Ok(())
}

fn scorer(kind: &str, model: Option<&Path>, g: &Graph) -> Res<Scorer> {
    match kind {
        "model" | "ocn" | "ocnp" => {
            let p = model.ok_or_else(|| usage(format!("--kind {kind} needs --model")))?;
            let t = load_trained(p, g)?;
            if kind != "model" && t.model.variant.as_str() != kind {
                return Err(usage(format!("model is {}, not {kind}", t.model.variant.as_str())));
            }
            Ok(Scorer::Model(Box::new(t)))
        }
        other => {
            let k: HeuristicKind = other.parse().map_err(|e: hocn::Error| usage(e.to_string()))?;
            Ok(Scorer::Heuristic(Heuristic::new(g, k)?))
        }
    }
}

fn read_pairs(path: &Path, n: usize) -> Res<PairBatch> {
    use std::io::BufRead;
    let mut pairs = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::Runtime(e.into()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split(|c: char| c == ',' || c.is_whitespace()).filter(|x| !x.is_empty()).collect();
        let parse = |x: &str| {
            x.parse::<Node>().map_err(|_| {
                CliError::Runtime(hocn::Error::Parse {
                    line: idx + 1,
                    msg: format!("bad node id `{x}`"),
                })
            })
        };
        match f.as_slice() {
            [a, b, ..] => {
                let (Ok(u), Ok(v)) = (parse(a), parse(b)) else {
                    if idx == 0 {
                        continue; // header
                    }
                    return Err(CliError::Runtime(hocn::Error::Parse {
                        line: idx + 1,
                        msg: "expected two node ids".into(),
                    }));
                };
                pairs.push((u.min(v), u.max(v)));
            }
            _ => {
                return Err(CliError::Runtime(hocn::Error::Parse {
                    line: idx + 1,
                    msg: "expected two node ids".into(),
                }))
            }
        }
    }
    Ok(PairBatch::new(pairs, n)?)
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "0.7,0.1,0.2")]
    pub ratios: String,
    /// Also write the internal,external id map (with --remap).
    #[arg(long)]
    pub id_map: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// cn, aa, ra, normalized_cn_<k>, or model/ocn/ocnp with --model
    #[arg(long, default_value = "cn")]
    pub kind: String,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// train, valid, test, or full (unsplit graph, with --pairs)
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Score these pairs (two ids per line) instead of positives plus negatives.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Model path; `.state` and `.meta` files are written alongside.
    #[arg(long)]
    pub model_out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// cn, aa, ra, normalized_cn_<k>, model (with --model) or fit (train per seed)
    #[arg(long, default_value = "cn")]
    pub kind: String,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// valid or test
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long, default_value = "20,50,100")]
    pub ks: String,
    /// Runs with seeds seed..seed+repeats, resplitting each time (edge-list input only).
    #[arg(long, default_value_t = 1)]
    pub repeats: u64,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// correlation, cv or jsd
    #[arg(long, default_value = "correlation")]
    pub what: String,
    /// Order for the coefficient of variation.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// node_totals or pair_row
    #[arg(long, default_value = "node_totals")]
    pub aggregation: String,
    /// Evaluate on at most this many edges (seeded sample); 0 keeps all.
    #[arg(long, default_value_t = 0)]
    pub max_pairs: usize,
}

#[derive(Args, Debug)]
pub struct TheoryArgs {
    /// grid (bound values over k) or validate (Monte-Carlo)
    #[arg(long, default_value = "grid")]
    pub mode: String,
    /// latent or ba
    #[arg(long, default_value = "latent")]
    pub graph_model: String,
    /// cn or normalized
    #[arg(long, default_value = "cn")]
    pub bound: String,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Latent radius; derived from --degree when absent.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 32.0)]
    pub degree: f64,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub steepness: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 3)]
    pub n_inner: usize,
    /// principal or minus-one
    #[arg(long, default_value = "principal")]
    pub branch: String,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value = "2..6")]
    pub k_range: String,
    #[arg(long, default_value_t = 1e8)]
    pub eta: f64,
    /// Use this value of iota - alpha at every k instead of deriving it from --eta.
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub sum_r: f64,
    #[arg(long, default_value_t = 0.8)]
    pub r_max: f64,
    #[arg(long, default_value_t = 3.0)]
    pub zeta: f64,
    #[arg(long, default_value_t = 4.0)]
    pub max_degree: f64,
    /// Use this constant C at every k for the normalized preferential-attachment bound.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value = "1024,4096,16384,65536")]
    pub batch_sizes: String,
    #[arg(long, default_value_t = 100_000)]
    pub nodes: usize,
    #[arg(long, default_value_t = 400_000)]
    pub edges: usize,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Report per-pair cost of each order instead of the batch-size sweep.
    #[arg(long)]
    pub order_costs: bool,
    #[arg(long, default_value_t = 2048)]
    pub order_batch: usize,
}

pub fn run(cli: Cli) -> Res<()> {
    let mut s = settings(&cli.global)?;
    let threads: usize = s.get("threads")?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| usage(format!("cannot set threads: {e}")))?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Train(a) => a.hyper.apply(&mut s),
        Command::Eval(a) => a.hyper.apply(&mut s),
        _ => {}
    }
    // Reject malformed settings before touching any input.
    train_config(&s)?;
    let report = match &cli.command {
        Command::Prepare(a) => prepare(a, &s)?,
        Command::Score(a) => score(a, &s)?,
        Command::Train(a) => train(a, &s)?,
        Command::Eval(a) => eval(a, &s)?,
        Command::Diagnose(a) => diagnose(a, &s)?,
        Command::Theory(a) => theory(a, &s)?,
        Command::Bench(a) => bench(a, &s)?,
    };
    report.emit(g.json, g.out.as_deref())
}

fn new_report(cmd: &str, s: &Settings) -> Res<Report> {
    Ok(Report::new(cmd, s.get("seed")?, s.echo()))
}

fn prepare(a: &PrepareArgs, s: &Settings) -> Res<Report> {
    let seed: u64 = s.get("seed")?;
    let (g, ids) = a.graph.load()?;
    let split = split_edges(&g, parse_ratios(&a.ratios)?, seed)?;
    if let Some(p) = &a.id_map {
        let ids = ids.ok_or_else(|| usage("--id-map needs --remap"))?;
        write_id_map(&ids, File::create(p).map_err(|e| CliError::Runtime(e.into()))?)?;
    }
    let mut r = new_report("prepare", s)?;
    r.note("ratios", &a.ratios);
    write_split_manifest(&split, &mut r.body)?;
    Ok(r)
}

fn score(a: &ScoreArgs, s: &Settings) -> Res<Report> {
    let seed: u64 = s.get("seed")?;
    check_kind(&a.kind)?;
    if a.kind == "fit" {
        return Err(usage("score needs a saved model, not --kind fit"));
    }
    let (g, pos, neg) = if a.split == "full" {
        let p = a.pairs.as_ref().ok_or_else(|| usage("--split full needs --pairs"))?;
        let g = match &a.data.manifest {
            Some(_) => a.data.load(seed)?.0,
            None => a.data.graph.load()?.0,
        };
        let pos = read_pairs(p, g.n())?;
        (g, pos, PairBatch::default())
    } else {
        let part = parse_part(&a.split)?;
        let (full, split) = a.data.load(seed)?;
        let g = part_graph(&split, part, s.get("use_valid_as_input")?);
        let (pos, neg) = match &a.pairs {
            Some(p) => (read_pairs(p, g.n())?, PairBatch::default()),
            None => part_pairs(&full, &split, part, seed)?,
        };
        (g, pos, neg)
    };
    let mut sc = scorer(&a.kind, a.model.as_deref(), &g)?;
    let ps = sc.scores(&g, &pos)?;
    let ns = sc.scores(&g, &neg)?;
    let mut r = new_report("score", s)?;
    r.note("kind", &a.kind);
    r.note("split", &a.split);
    writeln!(r.body, "u,v,label,score").map_err(|e| CliError::Runtime(e.into()))?;
    for (b, sc) in [(&pos, &ps), (&neg, &ns)] {
        for (x, (&(u, v), y)) in b.pairs.iter().zip(sc.iter()).enumerate() {
            let l = match b.labels.as_ref().map(|l| l[x]) {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            writeln!(r.body, "{u},{v},{l},{y}").map_err(|e| CliError::Runtime(e.into()))?;
        }
    }
    Ok(r)
}

fn train(a: &TrainArgs, s: &Settings) -> Res<Report> {
    let seed: u64 = s.get("seed")?;
    let (_, split) = a.data.load(seed)?;
    let cfg = train_config(s)?;
    let t = train_model(&split, &cfg)?;
    save_trained(&t, s, &a.model_out)?;
    let mut r = new_report("train", s)?;
    r.note("model", a.model_out.display());
    r.note("final_accuracy", t.report.final_accuracy);
    r.note("alpha", format!("{:?}", t.model.alpha));
    writeln!(r.body, "step,loss").map_err(|e| CliError::Runtime(e.into()))?;
    for (i, l) in t.report.losses.iter().enumerate() {
        writeln!(r.body, "{i},{l}").map_err(|e| CliError::Runtime(e.into()))?;
    }
    Ok(r)
}

fn eval(a: &EvalArgs, s: &Settings) -> Res<Report> {
    let base: u64 = s.get("seed")?;
    let part = parse_part(&a.split)?;
    if part == Part::Train {
        return Err(usage("eval runs on valid or test"));
    }
    if a.repeats > 1 && a.data.manifest.is_some() {
        return Err(usage("--repeats needs --input, not --manifest"));
    }
    let ks: Vec<usize> = parse_list(&a.ks, "K")?;
    check_kind(&a.kind)?;
    let mut reports: Vec<EvalReport> = Vec::new();
    for seed in base..base + a.repeats.max(1) {
        let (full, split) = a.data.load(seed)?;
        let g = part_graph(&split, part, s.get("use_valid_as_input")?);
        let mut sc = if a.kind == "fit" {
            let mut run = s.clone();
            run.set("seed", seed);
            Scorer::Model(Box::new(train_model(&split, &train_config(&run)?)?))
        } else {
            scorer(&a.kind, a.model.as_deref(), &g)?
        };
        let (pos, neg) = part_pairs(&full, &split, part, seed)?;
        let ps = sc.scores(&g, &pos)?;
        let ns = sc.scores(&g, &neg)?;
        reports.push(evaluate_scores(&ps, &ns, &ks, seed)?);
    }
    let mut r = new_report("eval", s)?;
    r.note("kind", &a.kind);
    r.note("split", &a.split);
    for (x, rep) in reports.iter().enumerate() {
        rep.write_csv(&mut r.body, x == 0)?;
    }
    if reports.len() > 1 {
        let io = |e: std::io::Error| CliError::Runtime(e.into());
        let (n_pos, n_neg) = (reports[0].n_pos, reports[0].n_neg);
        for &k in &ks {
            let v: Vec<f64> = reports.iter().map(|r| r.hits[&k]).collect();
            let (m, sd) = mean_std(&v);
            writeln!(r.body, "hits_mean,{k},{m},{n_pos},{n_neg},{base}").map_err(io)?;
            writeln!(r.body, "hits_std,{k},{sd},{n_pos},{n_neg},{base}").map_err(io)?;
        }
        let v: Vec<f64> = reports.iter().map(|r| r.mrr).collect();
        let (m, sd) = mean_std(&v);
        writeln!(r.body, "mrr_mean,,{m},{n_pos},{n_neg},{base}").map_err(io)?;
        writeln!(r.body, "mrr_std,,{sd},{n_pos},{n_neg},{base}").map_err(io)?;
    }
    Ok(r)
}

fn edge_batch(g: &Graph, max_pairs: usize, seed: u64) -> PairBatch {
    use rand::seq::SliceRandom;
    let mut pairs: Vec<(Node, Node)> = g.edges().map(|(u, v)| (u as Node, v as Node)).collect();
    if max_pairs > 0 && pairs.len() > max_pairs {
        let mut r = hocn::rng::rng(derive_seed(seed, 0xd1a9, 0));
        pairs.shuffle(&mut r);
        pairs.truncate(max_pairs);
        pairs.sort_unstable();
    }
    PairBatch::labeled(pairs, true)
}

fn diagnose(a: &DiagnoseArgs, s: &Settings) -> Res<Report> {
    let seed: u64 = s.get("seed")?;
    let k_max: usize = s.get("k_max")?;
    let (g, _) = a.graph.load()?;
    let batch = edge_batch(&g, a.max_pairs, seed);
    let opts = CnOptions {
        exclude_endpoints: s.get("exclude_endpoints")?,
        max_order: k_max.max(a.k).max(hocn::features::DEFAULT_MAX_ORDER),
        ..Default::default()
    };
    let mut r = new_report("diagnose", s)?;
    r.note("what", &a.what);
    r.note("pairs", batch.len());
    match a.what.as_str() {
        "correlation" | "jsd" => {
            let rep = redundancy_report(&g, &batch, k_max.max(2), &opts)?;
            if a.what == "jsd" {
                write_jsd(&rep.jsd_before, &rep.jsd_after, &mut r.body)?;
            } else {
                write_correlation(&rep.corr_raw, "raw", &mut r.body, true)?;
                write_correlation(&rep.corr_orth, "orthogonal", &mut r.body, false)?;
            }
        }
        "cv" => {
            let agg: CvAggregation = a.aggregation.parse().map_err(|e: hocn::Error| usage(e.to_string()))?;
            r.note("aggregation", agg.as_str());
            let (raw, norm) = cv_report(&g, &batch, a.k, &opts, agg)?;
            writeln!(r.body, "order,variant,cv").map_err(|e| CliError::Runtime(e.into()))?;
            write_cv_row(&mut r.body, a.k, "raw", raw)?;
            write_cv_row(&mut r.body, a.k, "normalized", norm)?;
        }
        other => return Err(usage(format!("unknown diagnostic `{other}`"))),
    }
    Ok(r)
}

fn bound_cell(v: hocn::Result<BoundValue>) -> String {
    match v {
        Ok(BoundValue::Value(x)) => x.to_string(),
        Ok(BoundValue::Vacuous) => "vacuous".into(),
        Err(_) => "domain_error".into(),
    }
}

fn theory(a: &TheoryArgs, s: &Settings) -> Res<Report> {
    let seed: u64 = s.get("seed")?;
    let branch: WBranch = a.branch.parse().map_err(|e: hocn::Error| usage(e.to_string()))?;
    let mut r = new_report("theory", s)?;
    let io = |e: std::io::Error| CliError::Runtime(e.into());
    match a.mode.as_str() {
        "grid" => {
            writeln!(r.body, "k,latent_cn,latent_normalized,ba_cn,ba_normalized").map_err(io)?;
            for k in parse_range(&a.k_range)? {
                let b = BoundInputs {
                    n: a.n,
                    delta: a.delta,
                    k,
                    dim: a.dim,
                    sum_r: a.sum_r,
                    r_max: a.r_max,
                    eta_2k: a.eta,
                    zeta: a.zeta,
                    rho: a.rho,
                    m: a.m,
                    steepness: a.steepness,
                    max_degree: a.max_degree,
                };
                let gap = match a.gap {
                    Some(x) => Ok(x),
                    None => hocn::theory::bounds::latent_gap(&b),
                };
                let gap = gap.map_err(|e| e.to_string());
                let un = gap.clone().map_err(hocn::Error::Domain).map(|x| latent_bound_from_gap(x, k, a.dim, a.sum_r, a.r_max));
                let no = gap.map_err(hocn::Error::Domain).and_then(|x| latent_normalized_from_gap(x, k, a.dim, a.sum_r, a.r_max, a.zeta, a.rho, a.n));
                let bu = ba_bound_unnormalized(&b).map(BoundValue::Value);
                let bn = a
                    .c
                    .map_or_else(|| ba_c(&b), Ok)
                    .and_then(|c| ba_normalized_from_c(&b, c, a.n_inner, branch))
                    .map(BoundValue::Value);
                writeln!(
                    r.body,
                    "{k},{},{},{},{}",
                    bound_cell(un),
                    bound_cell(no),
                    bound_cell(bu),
                    bound_cell(bn)
                )
                .map_err(io)?;
            }
            if a.gap.is_none() {
                r.note("alpha_conc", alpha_conc(a.n, a.delta)?);
            }
        }
        "validate" => {
            let model = match a.graph_model.as_str() {
                "latent" => GraphModel::Latent {
                    n: a.n,
                    dim: a.dim,
                    radius: a
                        .radius
                        .unwrap_or_else(|| LatentModelParams::radius_for_degree(a.n, a.dim, a.degree)),
                },
                "ba" => GraphModel::Ba {
                    n: a.n,
                    m: a.m,
                    dim: a.dim,
                    steepness: a.steepness,
                },
                other => return Err(usage(format!("unknown graph model `{other}`"))),
            };
            let kind = match (a.graph_model.as_str(), a.bound.as_str()) {
                ("latent", "cn") => BoundKind::Unnormalized,
                ("latent", "normalized") => BoundKind::Normalized { rho: a.rho },
                ("ba", "cn") => BoundKind::BaUnnormalized,
                ("ba", "normalized") => BoundKind::BaNormalized {
                    n_inner: a.n_inner,
                    branch,
                },
                (_, other) => return Err(usage(format!("unknown bound `{other}`"))),
            };
            let cfg = ValidationConfig {
                model,
                kind,
                k: a.k,
                delta: a.delta,
                trials: a.trials,
                seed,
            };
            let rep = validate_bound(&cfg).map_err(|e| match e {
                hocn::Error::Config(m) => usage(m),
                other => CliError::Runtime(other),
            })?;
            if let GraphModel::Latent { radius, .. } = model {
                r.note("radius", radius);
            }
            rep.write_csv(&mut r.body, true)?;
        }
        other => return Err(usage(format!("unknown theory mode `{other}`"))),
    }
    Ok(r)
}

fn bench(a: &BenchArgs, s: &Settings) -> Res<Report> {
    let seed: u64 = s.get("seed")?;
    let g = sample_gnm(a.nodes, a.edges, derive_seed(seed, 0xbe4c9, 0))?;
    let mut r = new_report("bench", s)?;
    r.note("graph", format!("gnm n={} m={}", a.nodes, a.edges));
    let io = |e: std::io::Error| CliError::Runtime(e.into());
    if a.order_costs {
        let costs = order_costs(&g, a.order_batch, s.get("k_max")?, a.reps, seed)?;
        write_order_costs(&costs, &mut r.body)?;
        return Ok(r);
    }
    let cfg = BenchConfig {
        batch_sizes: parse_list(&a.batch_sizes, "batch size")?,
        pipeline: pipeline_config(s)?,
        reps: a.reps,
        seed,
    };
    let rep = run_bench(&g, &cfg)?;
    writeln!(r.body, "t,seconds,fit_b,fit_c,fit_r2").map_err(io)?;
    let (b, c, r2) = rep.fit.map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.b, f.c, f.r2));
    for p in &rep.points {
        writeln!(r.body, "{},{},{b},{c},{r2}", p.t, p.seconds).map_err(io)?;
    }
    Ok(r)
}
