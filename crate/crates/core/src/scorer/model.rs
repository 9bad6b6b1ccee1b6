use std::io::{BufRead, Write};
use std::str::FromStr;

use super::embed::NodeEmbedding;
use crate::error::{Error, Result};
use crate::sparse::SparseRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Ocn,
    Ocnp,
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ocn" => Ok(Variant::Ocn),
            "ocnp" => Ok(Variant::Ocnp),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Ocn => "ocn",
            Variant::Ocnp => "ocnp",
        }
    }
}

/// How the pair term and the per-order pooled terms are joined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    Sum,
    Concat,
}

impl FromStr for Combine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Combine::Sum),
            "concat" | "cat" => Ok(Combine::Concat),
            other => Err(Error::Config(format!("unknown combine mode `{other}`"))),
        }
    }
}

impl Combine {
    pub fn as_str(self) -> &'static str {
        match self {
            Combine::Sum => "sum",
            Combine::Concat => "concat",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreModel {
    pub k_max: usize,
    pub alpha: Vec<f64>,
    pub depth: usize,
    pub head_w: Vec<f64>,
    pub head_b: f64,
    pub variant: Variant,
    pub combine: Combine,
}

const MAGIC: &str = "hocn-model 1";

impl ScoreModel {
    /// `alpha = 1`, zero head. `f` is the node feature width.
    pub fn new(k_max: usize, depth: usize, f: usize, variant: Variant, combine: Combine) -> Self {
        let width = match combine {
            Combine::Sum => f,
            Combine::Concat => f * (k_max + 1),
        };
        ScoreModel {
            k_max,
            alpha: vec![1.0; k_max],
            depth,
            head_w: vec![0.0; width],
            head_b: 0.0,
            variant,
            combine,
        }
    }

    pub fn node_dim(&self) -> usize {
        match self.combine {
            Combine::Sum => self.head_w.len(),
            Combine::Concat => self.head_w.len() / (self.k_max + 1),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.head_b.is_finite()
            && self.alpha.iter().all(|x| x.is_finite())
            && self.head_w.iter().all(|x| x.is_finite())
    }

    /// Logit from the pair term `g = H_i ⊙ H_j` and pooled terms `p[k] = OCN^k row · H`.
    pub fn logit_from_parts(&self, g: &[f64], p: &[Vec<f64>]) -> f64 {
        let f = g.len();
        let mut s = self.head_b;
        match self.combine {
            Combine::Sum => {
                for d in 0..f {
                    let mut z = g[d];
                    for (a, pk) in self.alpha.iter().zip(p) {
                        z += a * pk[d];
                    }
                    s += self.head_w[d] * z;
                }
            }
            Combine::Concat => {
                s += dot(&self.head_w[..f], g);
                for (k, (a, pk)) in self.alpha.iter().zip(p).enumerate() {
                    s += a * dot(&self.head_w[(k + 1) * f..(k + 2) * f], pk);
                }
            }
        }
        s
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "variant {}", self.variant.as_str())?;
        writeln!(w, "combine {}", self.combine.as_str())?;
        writeln!(w, "k {}", self.k_max)?;
        writeln!(w, "depth {}", self.depth)?;
        write_vec(&mut w, "alpha", &self.alpha)?;
        write_vec(&mut w, "head_w", &self.head_w)?;
        writeln!(w, "head_b {}", self.head_b)?;
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        match lines.next() {
            Some((_, Ok(l))) if l.trim() == MAGIC => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected `{MAGIC}` header"),
                })
            }
        }
        let mut m = ScoreModel::new(1, 0, 0, Variant::Ocn, Combine::Sum);
        let mut seen_k = false;
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            let bad = |msg: &str| Error::Parse {
                line: lineno,
                msg: msg.to_string(),
            };
            let mut f = line.split_whitespace();
            let Some(key) = f.next() else { continue };
            let rest: Vec<&str> = f.collect();
            let one = || rest.first().copied().ok_or_else(|| bad("missing value"));
            match key {
                "variant" => m.variant = one()?.parse()?,
                "combine" => m.combine = one()?.parse()?,
                "k" => {
                    m.k_max = one()?.parse().map_err(|_| bad("bad k"))?;
                    seen_k = true;
                }
                "depth" => m.depth = one()?.parse().map_err(|_| bad("bad depth"))?,
                "alpha" => m.alpha = parse_vec(&rest).map_err(|_| bad("bad alpha"))?,
                "head_w" => m.head_w = parse_vec(&rest).map_err(|_| bad("bad head_w"))?,
                "head_b" => m.head_b = one()?.parse().map_err(|_| bad("bad head_b"))?,
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        if !seen_k || m.alpha.len() != m.k_max {
            return Err(Error::Config("model file: alpha length must equal k".into()));
        }
        Ok(m)
    }
}

fn write_vec<W: Write>(w: &mut W, key: &str, v: &[f64]) -> Result<()> {
    write!(w, "{key} {}", v.len())?;
    for x in v {
        write!(w, " {x}")?;
    }
    writeln!(w)?;
    Ok(())
}

fn parse_vec(rest: &[&str]) -> std::result::Result<Vec<f64>, ()> {
    let len: usize = rest.first().ok_or(())?.parse().map_err(|_| ())?;
    if rest.len() != len + 1 {
        return Err(());
    }
    rest[1..].iter().map(|s| s.parse().map_err(|_| ())).collect()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `H_i ⊙ H_j`.
pub(crate) fn pair_term(h: &NodeEmbedding, i: usize, j: usize) -> Vec<f64> {
    h.row(i).iter().zip(h.row(j)).map(|(a, b)| a * b).collect()
}

/// `row · H`, pooling node features by structural weight.
pub(crate) fn pool(row: &SparseRow, h: &NodeEmbedding) -> Vec<f64> {
    let mut out = vec![0.0; h.f];
    for (c, x) in row.iter() {
        for (o, v) in out.iter_mut().zip(h.row(c)) {
            *o += x * v;
        }
    }
    out
}

/// Logit for pair `(i, j)` given its per-order basis rows.
pub fn ocn_score(
    model: &ScoreModel,
    h: &NodeEmbedding,
    rows: &[&SparseRow],
    (i, j): (usize, usize),
) -> Result<f64> {
    if rows.len() < model.k_max {
        return Err(Error::Config(format!(
            "model uses {} orders but {} basis rows were given",
            model.k_max,
            rows.len()
        )));
    }
    if h.f != model.node_dim() {
        return Err(Error::Config(format!(
            "model expects {} node features, embedding has {}",
            model.node_dim(),
            h.f
        )));
    }
    let g = pair_term(h, i, j);
    let p: Vec<Vec<f64>> = rows[..model.k_max].iter().map(|r| pool(r, h)).collect();
    Ok(model.logit_from_parts(&g, &p))
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_zero_is_inner_product() {
        let h = NodeEmbedding::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0]]).unwrap();
        let mut m = ScoreModel::new(1, 0, 2, Variant::Ocn, Combine::Sum);
        m.alpha = vec![0.0];
        m.head_w = vec![1.0, 1.0];
        let row = SparseRow::from_dense(&[0.3, 0.7]);
        assert_eq!(ocn_score(&m, &h, &[&row], (0, 1)).unwrap(), 1.0);
    }

    #[test]
    fn identity_features_zero_rows_give_bias() {
        let h = NodeEmbedding::identity(3);
        let mut m = ScoreModel::new(1, 0, 3, Variant::Ocn, Combine::Sum);
        m.head_w = vec![0.4, -2.0, 1.5];
        m.head_b = 0.25;
        let row = SparseRow::default();
        assert_eq!(ocn_score(&m, &h, &[&row], (0, 2)).unwrap(), 0.25);
        assert!(ocn_score(&m, &h, &[], (0, 2)).is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let mut m = ScoreModel::new(2, 1, 3, Variant::Ocnp, Combine::Concat);
        m.alpha = vec![0.1 + 0.2, -1e-17];
        m.head_w = (0..9).map(|i| (i as f64).sqrt() / 7.0).collect();
        m.head_b = -3.25;
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        assert_eq!(ScoreModel::read(&buf[..]).unwrap(), m);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }
}
