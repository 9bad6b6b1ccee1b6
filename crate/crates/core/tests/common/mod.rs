#![allow(dead_code)]

use std::collections::HashSet;

use hocn::rng::rng;
use hocn::theory::sample_ba_graph;
use hocn::Graph;
use rand::Rng;

pub fn g4() -> Graph {
    Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap()
}

pub fn star(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|l| (0, l))).unwrap()
}

pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
}

pub fn cycle(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
}

pub fn complete(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).unwrap()
}

pub fn grid(w: usize, h: usize) -> Graph {
    let id = |x: usize, y: usize| y * w + x;
    let mut e = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                e.push((id(x, y), id(x + 1, y)));
            }
            if y + 1 < h {
                e.push((id(x, y), id(x, y + 1)));
            }
        }
    }
    Graph::from_edges(w * h, e).unwrap()
}

pub fn petersen() -> Graph {
    let mut e = Vec::new();
    for i in 0..5 {
        e.push((i, (i + 1) % 5));
        e.push((i, i + 5));
        e.push((i + 5, (i + 2) % 5 + 5));
    }
    Graph::from_edges(10, e).unwrap()
}

/// Erdős–Rényi G(n, p).
pub fn er(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen::<f64>() < p {
                e.push((i, j));
            }
        }
    }
    Graph::from_edges(n, e).unwrap()
}

/// Graphs with at most 50 nodes used by the exhaustive pairwise checks.
pub fn fixture_suite() -> Vec<(String, Graph)> {
    let mut v: Vec<(String, Graph)> = vec![
        ("g4".into(), g4()),
        ("star5".into(), star(5)),
        ("path9".into(), path(9)),
        ("cycle12".into(), cycle(12)),
        ("k6".into(), complete(6)),
        ("grid5x6".into(), grid(5, 6)),
        ("petersen".into(), petersen()),
    ];
    for s in 0..5 {
        v.push((format!("er30_{s}"), er(30, 0.15, 100 + s)));
        v.push((format!("er50_{s}"), er(50, 0.08, 200 + s)));
        v.push((format!("ba50_{s}"), sample_ba_graph(50, 2, 300 + s).unwrap()));
    }
    v
}

/// Edge bitmask index of `(i, j)` with `i < j` among `n` nodes.
fn bit(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

fn permutations(cells: &[Vec<usize>]) -> Vec<Vec<usize>> {
    // Orders vertices cell by cell, permuting freely inside each cell.
    let mut out = vec![Vec::new()];
    for cell in cells {
        let mut perms_of_cell = Vec::new();
        let mut c = cell.clone();
        heap_permute(&mut c, cell.len(), &mut perms_of_cell);
        let mut next = Vec::with_capacity(out.len() * perms_of_cell.len());
        for prefix in &out {
            for p in &perms_of_cell {
                let mut q: Vec<usize> = prefix.clone();
                q.extend_from_slice(p);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn heap_permute(a: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(a.clone());
        return;
    }
    for i in 0..k {
        heap_permute(a, k - 1, out);
        if k % 2 == 0 {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
}

/// Canonical adjacency mask: minimum over relabelings that sort vertices by (degree, sorted neighbor degrees).
fn canonical(n: usize, adj: &[Vec<bool>]) -> u64 {
    let deg: Vec<usize> = adj.iter().map(|r| r.iter().filter(|&&b| b).count()).collect();
    let inv: Vec<(usize, Vec<usize>)> = (0..n)
        .map(|v| {
            let mut nd: Vec<usize> = (0..n).filter(|&u| adj[v][u]).map(|u| deg[u]).collect();
            nd.sort_unstable();
            (deg[v], nd)
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| inv[a].cmp(&inv[b]));
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for &v in &order {
        match cells.last_mut() {
            Some(c) if inv[c[0]] == inv[v] => c.push(v),
            _ => cells.push(vec![v]),
        }
    }
    let mut best = u64::MAX;
    for p in permutations(&cells) {
        let mut m = 0u64;
        for a in 0..n {
            for b in a + 1..n {
                if adj[p[a]][p[b]] {
                    m |= 1 << bit(n, a, b);
                }
            }
        }
        best = best.min(m);
    }
    best
}

fn mask_to_graph(n: usize, m: u64) -> Graph {
    let mut e = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if m >> bit(n, i, j) & 1 == 1 {
                e.push((i, j));
            }
        }
    }
    Graph::from_edges(n, e).unwrap()
}

/// One representative per isomorphism class for each order `0..=max_n`, grown one vertex at a time.
pub fn nonisomorphic_graphs(max_n: usize) -> Vec<Vec<Graph>> {
    assert!(max_n <= 9);
    let mut levels: Vec<Vec<u64>> = vec![vec![0]];
    for n in 1..=max_n {
        let prev = &levels[n - 1];
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for &m in prev {
            let mut adj = vec![vec![false; n]; n];
            for i in 0..n - 1 {
                for j in i + 1..n - 1 {
                    if m >> bit(n - 1, i, j) & 1 == 1 {
                        adj[i][j] = true;
                        adj[j][i] = true;
                    }
                }
            }
            for sub in 0u32..(1 << (n - 1)) {
                for u in 0..n - 1 {
                    let on = sub >> u & 1 == 1;
                    adj[u][n - 1] = on;
                    adj[n - 1][u] = on;
                }
                let c = canonical(n, &adj);
                if seen.insert(c) {
                    next.push(c);
                }
            }
        }
        next.sort_unstable();
        levels.push(next);
    }
    levels
        .iter()
        .enumerate()
        .map(|(n, ms)| ms.iter().map(|&m| mask_to_graph(n, m)).collect())
        .collect()
}

/// Number of walks of exactly `len` steps from `u` ending at each node, by explicit depth-first enumeration.
pub fn enumerate_walks(g: &Graph, u: usize, len: usize) -> Vec<f64> {
    fn go(g: &Graph, at: usize, left: usize, out: &mut [f64]) {
        if left == 0 {
            out[at] += 1.0;
            return;
        }
        for &y in g.neighbors(at) {
            go(g, y as usize, left - 1, out);
        }
    }
    let mut out = vec![0.0; g.n()];
    go(g, u, len, &mut out);
    out
}

/// `t[mid][c][j]`: walks of exactly `len` steps from `i` to `j` whose step `mid` lands on `c`,
/// by explicit depth-first enumeration of every walk.
pub fn walk_tally(g: &Graph, i: usize, len: usize) -> Vec<Vec<Vec<f64>>> {
    fn go(g: &Graph, path: &mut Vec<usize>, len: usize, t: &mut [Vec<Vec<f64>>]) {
        let at = *path.last().unwrap();
        if path.len() == len + 1 {
            for (mid, row) in t.iter_mut().enumerate() {
                row[path[mid]][at] += 1.0;
            }
            return;
        }
        for &y in g.neighbors(at) {
            path.push(y as usize);
            go(g, path, len, t);
            path.pop();
        }
    }
    let n = g.n();
    let mut t = vec![vec![vec![0.0; n]; n]; len + 1];
    go(g, &mut vec![i], len, &mut t);
    t
}

pub fn cora() -> Graph {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/cora.cites");
    let f = std::fs::File::open(path).expect("cora edge list");
    hocn::graph::load_edge_list_remapped(std::io::BufReader::new(f), hocn::graph::EdgeFormat::Tsv)
        .unwrap()
        .graph
}

pub fn all_pairs(n: usize) -> Vec<(u32, u32)> {
    (0..n as u32).flat_map(|i| (i + 1..n as u32).map(move |j| (i, j))).collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
