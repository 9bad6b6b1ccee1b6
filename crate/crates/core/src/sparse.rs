use crate::graph::{Graph, Node};

/// Sparse row with ascending column indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRow {
    pub idx: Vec<Node>,
    pub val: Vec<f64>,
}

impl SparseRow {
    pub fn unit(c: usize) -> Self {
        SparseRow {
            idx: vec![c as Node],
            val: vec![1.0],
        }
    }

    pub fn from_dense(d: &[f64]) -> Self {
        let mut r = SparseRow::default();
        for (c, &x) in d.iter().enumerate() {
            if x != 0.0 {
                r.idx.push(c as Node);
                r.val.push(x);
            }
        }
        r
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut d = vec![0.0; n];
        for (&c, &x) in self.idx.iter().zip(&self.val) {
            d[c as usize] = x;
        }
        d
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn get(&self, c: usize) -> f64 {
        match self.idx.binary_search(&(c as Node)) {
            Ok(p) => self.val[p],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx.iter().zip(&self.val).map(|(&c, &x)| (c as usize, x))
    }

    pub fn sum(&self) -> f64 {
        self.val.iter().sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.val.iter().map(|x| x * x).sum()
    }

    pub fn dot(&self, other: &SparseRow) -> f64 {
        let (mut a, mut b, mut s) = (0, 0, 0.0);
        while a < self.idx.len() && b < other.idx.len() {
            match self.idx[a].cmp(&other.idx[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    s += self.val[a] * other.val[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        s
    }

    /// Elementwise product; support is the intersection.
    pub fn hadamard(&self, other: &SparseRow) -> SparseRow {
        let mut out = SparseRow::default();
        let (mut a, mut b) = (0, 0);
        while a < self.idx.len() && b < other.idx.len() {
            match self.idx[a].cmp(&other.idx[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    let p = self.val[a] * other.val[b];
                    if p != 0.0 {
                        out.idx.push(self.idx[a]);
                        out.val.push(p);
                    }
                    a += 1;
                    b += 1;
                }
            }
        }
        out
    }

    /// `self + s * other`, dropping exact zeros.
    pub fn add_scaled(&self, other: &SparseRow, s: f64) -> SparseRow {
        let mut out = SparseRow {
            idx: Vec::with_capacity(self.nnz() + other.nnz()),
            val: Vec::with_capacity(self.nnz() + other.nnz()),
        };
        let mut push = |c: Node, x: f64| {
            if x != 0.0 {
                out.idx.push(c);
                out.val.push(x);
            }
        };
        let (mut a, mut b) = (0, 0);
        while a < self.idx.len() || b < other.idx.len() {
            let ca = self.idx.get(a).copied().unwrap_or(Node::MAX);
            let cb = other.idx.get(b).copied().unwrap_or(Node::MAX);
            if ca < cb {
                push(ca, self.val[a]);
                a += 1;
            } else if cb < ca {
                push(cb, s * other.val[b]);
                b += 1;
            } else {
                push(ca, self.val[a] + s * other.val[b]);
                a += 1;
                b += 1;
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for x in &mut self.val {
            *x *= s;
        }
        if s == 0.0 {
            self.idx.clear();
            self.val.clear();
        }
    }

    /// Multiplies column `c` by `w[c]`, dropping entries that become zero.
    pub fn scale_columns(&self, w: &[f64]) -> SparseRow {
        let mut out = SparseRow::default();
        for (c, x) in self.iter() {
            let y = x * w[c];
            if y != 0.0 {
                out.idx.push(c as Node);
                out.val.push(y);
            }
        }
        out
    }

    pub fn without_columns(&self, cols: &[usize]) -> SparseRow {
        let mut out = SparseRow::default();
        for (c, x) in self.iter() {
            if !cols.contains(&c) {
                out.idx.push(c as Node);
                out.val.push(x);
            }
        }
        out
    }

    pub fn abs(&self) -> SparseRow {
        SparseRow {
            idx: self.idx.clone(),
            val: self.val.iter().map(|x| x.abs()).collect(),
        }
    }
}

/// `h x ncols` sparse matrix stored by rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMat {
    pub ncols: usize,
    pub rows: Vec<SparseRow>,
}

impl SparseMat {
    pub fn zeros(h: usize, ncols: usize) -> Self {
        SparseMat {
            ncols,
            rows: vec![SparseRow::default(); h],
        }
    }

    pub fn from_dense(d: &[Vec<f64>]) -> Self {
        let ncols = d.first().map_or(0, Vec::len);
        SparseMat {
            ncols,
            rows: d.iter().map(|r| SparseRow::from_dense(r)).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.to_dense(self.ncols)).collect()
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseRow::nnz).sum()
    }

    pub fn frob_dot(&self, other: &SparseMat) -> f64 {
        debug_assert_eq!(self.rows.len(), other.rows.len());
        self.rows.iter().zip(&other.rows).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.rows.iter().map(SparseRow::norm_sq).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for r in &mut self.rows {
            r.scale(s);
        }
    }

    pub fn scaled(&self, s: f64) -> SparseMat {
        let mut m = self.clone();
        m.scale(s);
        m
    }

    pub fn add_scaled(&self, other: &SparseMat, s: f64) -> SparseMat {
        SparseMat {
            ncols: self.ncols,
            rows: self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| a.add_scaled(b, s))
                .collect(),
        }
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.ncols];
        for r in &self.rows {
            for (c, x) in r.iter() {
                s[c] += x;
            }
        }
        s
    }

    pub fn scale_columns(&self, w: &[f64]) -> SparseMat {
        SparseMat {
            ncols: self.ncols,
            rows: self.rows.iter().map(|r| r.scale_columns(w)).collect(),
        }
    }

    pub fn abs(&self) -> SparseMat {
        SparseMat {
            ncols: self.ncols,
            rows: self.rows.iter().map(SparseRow::abs).collect(),
        }
    }
}

/// Reusable scatter buffer for sparse `A x` products.
pub struct Workspace {
    acc: Vec<f64>,
    touched: Vec<Node>,
    mark: Vec<bool>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Workspace {
            acc: vec![0.0; n],
            touched: Vec::new(),
            mark: vec![false; n],
        }
    }

    /// `A x` for symmetric `A`, treating edge `mask` (if any) as absent.
    pub fn spmv(&mut self, g: &Graph, x: &SparseRow, mask: Option<(Node, Node)>) -> SparseRow {
        if self.acc.len() < g.n() {
            *self = Workspace::new(g.n());
        }
        for (c, w) in x.iter() {
            for &y in g.neighbors(c) {
                if let Some((a, b)) = mask {
                    let c = c as Node;
                    if (c == a && y == b) || (c == b && y == a) {
                        continue;
                    }
                }
                let yi = y as usize;
                if !self.mark[yi] {
                    self.mark[yi] = true;
                    self.touched.push(y);
                }
                self.acc[yi] += w;
            }
        }
        self.touched.sort_unstable();
        let mut out = SparseRow {
            idx: Vec::with_capacity(self.touched.len()),
            val: Vec::with_capacity(self.touched.len()),
        };
        for &y in &self.touched {
            let yi = y as usize;
            if self.acc[yi] != 0.0 {
                out.idx.push(y);
                out.val.push(self.acc[yi]);
            }
            self.acc[yi] = 0.0;
            self.mark[yi] = false;
        }
        self.touched.clear();
        out
    }

    /// Rows `e_u^T A^l` for `l = 0..=l_max`.
    pub fn walk_rows(
        &mut self,
        g: &Graph,
        u: usize,
        l_max: usize,
        mask: Option<(Node, Node)>,
    ) -> Vec<SparseRow> {
        let mut rows = Vec::with_capacity(l_max + 1);
        rows.push(SparseRow::unit(u));
        for l in 1..=l_max {
            let next = self.spmv(g, &rows[l - 1], mask);
            rows.push(next);
        }
        rows
    }
}
