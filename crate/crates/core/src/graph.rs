use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::num::IntErrorKind;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::rng;

pub type Node = u32;

/// Largest id a loader accepts; ids are stored as `u32`.
pub const MAX_NODE_ID: u64 = u32::MAX as u64 - 1;

/// Immutable undirected simple graph in compressed-row form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<Node>,
    degrees: Vec<u32>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub input_edges: usize,
    pub duplicates: usize,
    pub self_loops: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            row_offsets: vec![0; n + 1],
            col_indices: Vec::new(),
            degrees: vec![0; n],
        }
    }

    /// Builds from an undirected edge iterator. Self-loops and repeated edges are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::build(n, edges).map(|(g, _)| g)
    }

    pub fn build<I>(n: usize, edges: I) -> Result<(Self, BuildReport)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut report = BuildReport::default();
        let mut pairs: Vec<(Node, Node)> = Vec::new();
        for (u, v) in edges {
            report.input_edges += 1;
            if u >= n || v >= n {
                return Err(Error::Input(format!("edge ({u},{v}) out of range for n = {n}")));
            }
            if u == v {
                report.self_loops += 1;
                continue;
            }
            pairs.push((u as Node, v as Node));
            pairs.push((v as Node, u as Node));
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        report.duplicates = (before - pairs.len()) / 2;

        let mut row_offsets = vec![0usize; n + 1];
        for &(u, _) in &pairs {
            row_offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        let degrees = (0..n)
            .map(|u| (row_offsets[u + 1] - row_offsets[u]) as u32)
            .collect();
        let col_indices = pairs.into_iter().map(|(_, v)| v).collect();
        Ok((
            Graph {
                n,
                row_offsets,
                col_indices,
                degrees,
            },
            report,
        ))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.col_indices.len() / 2
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[Node] {
        &self.col_indices
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[Node] {
        &self.col_indices[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.degrees[u] as usize
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.neighbors(u).binary_search(&(v as Node)).is_ok()
    }

    /// Undirected edges with `u < v`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn without_edges(&self, removed: &HashSet<(Node, Node)>) -> Graph {
        let kept = self
            .edges()
            .filter(|&(u, v)| !removed.contains(&(u as Node, v as Node)));
        Graph::from_edges(self.n, kept).expect("subgraph ids stay in range")
    }

    pub fn union_edges<I>(&self, extra: I) -> Graph
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Graph::from_edges(self.n, self.edges().chain(extra)).expect("ids in range")
    }
}

pub fn norm_pair(u: usize, v: usize) -> (Node, Node) {
    if u < v {
        (u as Node, v as Node)
    } else {
        (v as Node, u as Node)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeFormat {
    Tsv,
    Csv,
}

impl FromStr for EdgeFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" | "txt" | "tab" | "cites" | "edges" => Ok(EdgeFormat::Tsv),
            "csv" => Ok(EdgeFormat::Csv),
            other => Err(Error::Config(format!("unknown edge format `{other}`"))),
        }
    }
}

impl EdgeFormat {
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => EdgeFormat::Csv,
            _ => EdgeFormat::Tsv,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub lines: usize,
    pub build: BuildReport,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} edge lines, {} duplicates dropped, {} self-loops dropped",
            self.build.input_edges, self.build.duplicates, self.build.self_loops
        )
    }
}

#[derive(Clone, Debug)]
pub struct Loaded {
    pub graph: Graph,
    pub report: LoadReport,
    /// `ids[internal] = external`, present when ids were remapped.
    pub ids: Option<Vec<u64>>,
}

fn parse_id(tok: &str, line: usize) -> Result<u64> {
    match tok.parse::<u64>() {
        Ok(v) if v > MAX_NODE_ID => Err(Error::Input(format!("line {line}: id {v} overflows"))),
        Ok(v) => Ok(v),
        Err(e) if *e.kind() == IntErrorKind::PosOverflow => {
            Err(Error::Input(format!("line {line}: id `{tok}` overflows")))
        }
        Err(_) => Err(Error::Parse {
            line,
            msg: format!("expected integer node id, found `{tok}`"),
        }),
    }
}

struct RawEdges {
    edges: Vec<(u64, u64)>,
    declared_nodes: Option<usize>,
    lines: usize,
}

fn read_raw<R: BufRead>(reader: R, format: EdgeFormat) -> Result<RawEdges> {
    let mut raw = RawEdges {
        edges: Vec::new(),
        declared_nodes: None,
        lines: 0,
    };
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        raw.lines += 1;
        let body = match line.find('#') {
            Some(pos) => {
                let comment = line[pos + 1..].trim();
                if let Some(rest) = comment.strip_prefix("nodes:") {
                    if let Ok(n) = rest.trim().parse::<usize>() {
                        raw.declared_nodes = Some(n);
                    }
                }
                &line[..pos]
            }
            None => &line[..],
        };
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = match format {
            EdgeFormat::Tsv => body.split_whitespace().collect(),
            EdgeFormat::Csv => body.split(',').map(str::trim).collect(),
        };
        if toks.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected two node ids, found {} fields", toks.len()),
            });
        }
        raw.edges.push((parse_id(toks[0], lineno)?, parse_id(toks[1], lineno)?));
    }
    Ok(raw)
}

/// Dense ids: node count is `max id + 1` (or a larger `# nodes: N` directive).
pub fn load_edge_list<R: BufRead>(reader: R, format: EdgeFormat) -> Result<Loaded> {
    let raw = read_raw(reader, format)?;
    let max_id = raw.edges.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(0);
    let n = max_id.max(raw.declared_nodes.unwrap_or(0));
    let (graph, build) =
        Graph::build(n, raw.edges.iter().map(|&(u, v)| (u as usize, v as usize)))?;
    Ok(Loaded {
        graph,
        report: LoadReport {
            lines: raw.lines,
            build,
        },
        ids: None,
    })
}

/// Sparse external ids remapped to `0..n` in ascending external order.
pub fn load_edge_list_remapped<R: BufRead>(reader: R, format: EdgeFormat) -> Result<Loaded> {
    let raw = read_raw(reader, format)?;
    let mut index: BTreeMap<u64, usize> = BTreeMap::new();
    for &(u, v) in &raw.edges {
        index.insert(u, 0);
        index.insert(v, 0);
    }
    let ids: Vec<u64> = index.keys().copied().collect();
    for (i, slot) in index.values_mut().enumerate() {
        *slot = i;
    }
    let (graph, build) = Graph::build(
        ids.len(),
        raw.edges.iter().map(|(u, v)| (index[u], index[v])),
    )?;
    Ok(Loaded {
        graph,
        report: LoadReport {
            lines: raw.lines,
            build,
        },
        ids: Some(ids),
    })
}

pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    writeln!(w, "# nodes: {}", g.n())?;
    for (u, v) in g.edges() {
        writeln!(w, "{u}\t{v}")?;
    }
    Ok(())
}

pub fn write_id_map<W: Write>(ids: &[u64], mut w: W) -> Result<()> {
    writeln!(w, "internal,external")?;
    for (i, e) in ids.iter().enumerate() {
        writeln!(w, "{i},{e}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairBatch {
    pub pairs: Vec<(Node, Node)>,
    pub labels: Option<Vec<bool>>,
}

impl PairBatch {
    pub fn new(pairs: Vec<(Node, Node)>, n: usize) -> Result<Self> {
        for &(u, v) in &pairs {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Input(format!("pair ({u},{v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::Input(format!("pair ({u},{u}) has equal endpoints")));
            }
        }
        Ok(PairBatch {
            pairs,
            labels: None,
        })
    }

    pub fn labeled(pairs: Vec<(Node, Node)>, label: bool) -> Self {
        let labels = Some(vec![label; pairs.len()]);
        PairBatch { pairs, labels }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn concat(&self, other: &PairBatch) -> PairBatch {
        let mut pairs = self.pairs.clone();
        pairs.extend_from_slice(&other.pairs);
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        PairBatch { pairs, labels }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitResult {
    pub train_graph: Graph,
    pub train: PairBatch,
    pub valid: PairBatch,
    pub test: PairBatch,
    pub split_seed: u64,
}

impl SplitResult {
    /// Graph used at evaluation time; optionally merges validation edges in.
    pub fn inference_graph(&self, use_valid_as_input: bool) -> Graph {
        if use_valid_as_input {
            self.train_graph.union_edges(
                self.valid.pairs.iter().map(|&(u, v)| (u as usize, v as usize)),
            )
        } else {
            self.train_graph.clone()
        }
    }

    pub fn all_positive_set(&self) -> HashSet<(Node, Node)> {
        self.train
            .pairs
            .iter()
            .chain(&self.valid.pairs)
            .chain(&self.test.pairs)
            .map(|&(u, v)| norm_pair(u as usize, v as usize))
            .collect()
    }
}

pub fn split_edges(g: &Graph, ratios: (f64, f64, f64), seed: u64) -> Result<SplitResult> {
    let (tr, va, te) = ratios;
    if [tr, va, te].iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Split(format!("ratios {ratios:?} outside [0,1]")));
    }
    if ((tr + va + te) - 1.0).abs() > 1e-9 {
        return Err(Error::Split(format!("ratios {ratios:?} do not sum to 1")));
    }
    let m = g.num_edges();
    if m < 3 {
        return Err(Error::Split(format!("graph has {m} edges, need at least 3")));
    }
    let n_test = (te * m as f64).round() as usize;
    let n_valid = (va * m as f64).round() as usize;
    if n_test + n_valid > m {
        return Err(Error::Split("rounded valid/test sizes exceed the edge count".into()));
    }
    let mut edges: Vec<(Node, Node)> = g.edges().map(|(u, v)| (u as Node, v as Node)).collect();
    edges.shuffle(&mut rng(seed));
    let mut test: Vec<_> = edges[..n_test].to_vec();
    let mut valid: Vec<_> = edges[n_test..n_test + n_valid].to_vec();
    let mut train: Vec<_> = edges[n_test + n_valid..].to_vec();
    test.sort_unstable();
    valid.sort_unstable();
    train.sort_unstable();
    let train_graph = Graph::from_edges(
        g.n(),
        train.iter().map(|&(u, v)| (u as usize, v as usize)),
    )?;
    Ok(SplitResult {
        train_graph,
        train: PairBatch::labeled(train, true),
        valid: PairBatch::labeled(valid, true),
        test: PairBatch::labeled(test, true),
        split_seed: seed,
    })
}

/// Pair count at or below which negatives are drawn from an explicit enumeration.
const ENUMERATE_LIMIT: usize = 4_000_000;

/// Uniform distinct unordered non-edges, avoiding `exclude` (pairs given as `(min, max)`).
pub fn sample_negatives(
    g: &Graph,
    count: usize,
    seed: u64,
    exclude: &HashSet<(Node, Node)>,
) -> Result<PairBatch> {
    let n = g.n();
    let total = n * n.saturating_sub(1) / 2;
    let excluded_non_edges = exclude
        .iter()
        .filter(|&&(u, v)| u < v && (v as usize) < n && !g.has_edge(u as usize, v as usize))
        .count();
    let available = total - g.num_edges() - excluded_non_edges;
    if count > available {
        return Err(Error::Sampling(format!(
            "requested {count} negatives but only {available} non-edges are available"
        )));
    }
    let mut r = rng(seed);
    let pairs = if total <= ENUMERATE_LIMIT || count * 2 > available {
        let mut pool = Vec::with_capacity(available);
        for u in 0..n {
            let nb = g.neighbors(u);
            let mut p = nb.partition_point(|&x| (x as usize) <= u);
            for v in u + 1..n {
                if p < nb.len() && nb[p] as usize == v {
                    p += 1;
                    continue;
                }
                let key = (u as Node, v as Node);
                if !exclude.contains(&key) {
                    pool.push(key);
                }
            }
        }
        let (chosen, _) = pool.partial_shuffle(&mut r, count);
        chosen.to_vec()
    } else {
        let mut seen = HashSet::with_capacity(count * 2);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let u = r.gen_range(0..n);
            let v = r.gen_range(0..n);
            if u == v || g.has_edge(u, v) {
                continue;
            }
            let key = norm_pair(u, v);
            if exclude.contains(&key) || !seen.insert(key) {
                continue;
            }
            out.push(key);
        }
        out
    };
    Ok(PairBatch::labeled(pairs, false))
}

pub fn write_split_manifest<W: Write>(split: &SplitResult, mut w: W) -> Result<()> {
    writeln!(w, "# split_seed: {}", split.split_seed)?;
    writeln!(w, "# nodes: {}", split.train_graph.n())?;
    writeln!(w, "u,v,split")?;
    for (name, part) in [("train", &split.train), ("valid", &split.valid), ("test", &split.test)] {
        for &(u, v) in &part.pairs {
            writeln!(w, "{u},{v},{name}")?;
        }
    }
    Ok(())
}

pub fn read_split_manifest<R: BufRead>(reader: R) -> Result<SplitResult> {
    let mut parts: [Vec<(Node, Node)>; 3] = Default::default();
    let mut seed = 0u64;
    let mut n = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if let Some(c) = t.strip_prefix('#') {
            let c = c.trim();
            if let Some(s) = c.strip_prefix("split_seed:") {
                seed = s.trim().parse().unwrap_or(0);
            } else if let Some(s) = c.strip_prefix("nodes:") {
                n = n.max(s.trim().parse().unwrap_or(0));
            }
            continue;
        }
        if t.is_empty() || t == "u,v,split" {
            continue;
        }
        let f: Vec<&str> = t.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: "expected u,v,split".into(),
            });
        }
        let u = parse_id(f[0], lineno)? as Node;
        let v = parse_id(f[1], lineno)? as Node;
        let slot = match f[2] {
            "train" => 0,
            "valid" => 1,
            "test" => 2,
            other => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("unknown split `{other}`"),
                })
            }
        };
        n = n.max(u.max(v) as usize + 1);
        parts[slot].push((u, v));
    }
    let [train, valid, test] = parts;
    let train_graph = Graph::from_edges(n, train.iter().map(|&(u, v)| (u as usize, v as usize)))?;
    Ok(SplitResult {
        train_graph,
        train: PairBatch::labeled(train, true),
        valid: PairBatch::labeled(valid, true),
        test: PairBatch::labeled(test, true),
        split_seed: seed,
    })
}
