use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Simple moving average with weight `1/(count+1)` on the newest value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunningScalar {
    pub count: u64,
    pub value: f64,
}

impl RunningScalar {
    pub fn update(&mut self, x: f64) {
        let beta = 1.0 / (self.count + 1) as f64;
        self.value = (1.0 - beta) * self.value + beta * x;
        self.count += 1;
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunningVector {
    pub count: u64,
    pub value: Vec<f64>,
}

impl RunningVector {
    pub fn update(&mut self, x: &[f64]) {
        if self.value.len() < x.len() {
            self.value.resize(x.len(), 0.0);
        }
        let gamma = 1.0 / (1 + self.count) as f64;
        for (v, &xi) in self.value.iter_mut().zip(x) {
            *v = (1.0 - gamma) * *v + gamma * xi;
        }
        self.count += 1;
    }
}

/// Running statistics shared by the orthogonalizer and the normalizer.
/// Single writer; clone to snapshot.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunningState {
    /// Training batches seen.
    pub t: u64,
    /// `(k, i)` with `i < k` -> running `<CN^k, OCN^i>`.
    pub xi_hat: BTreeMap<(usize, usize), RunningScalar>,
    /// `k` -> running column sums of `CN^k`.
    pub psi_hat: BTreeMap<usize, RunningVector>,
    /// Running mean training batch size.
    pub batch_size: RunningScalar,
}

const MAGIC: &str = "hocn-state 1";

impl RunningState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn xi(&self, k: usize, i: usize) -> Option<f64> {
        self.xi_hat.get(&(k, i)).map(|r| r.value)
    }

    pub(crate) fn bump(&mut self, count: u64) {
        self.t = self.t.max(count);
    }

    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "t {}", self.t)?;
        writeln!(w, "batch {} {}", self.batch_size.count, self.batch_size.value)?;
        for (&(k, i), r) in &self.xi_hat {
            writeln!(w, "xi {k} {i} {} {}", r.count, r.value)?;
        }
        for (&k, r) in &self.psi_hat {
            write!(w, "psi {k} {} {}", r.count, r.value.len())?;
            for x in &r.value {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(reader: R) -> Result<Self> {
        let mut st = RunningState::default();
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
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            let bad = |m: &str| Error::Parse {
                line: lineno,
                msg: m.to_string(),
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<&str> { f.get(i).copied().ok_or_else(|| bad("truncated")) };
            match f.first().copied() {
                None => continue,
                Some("t") => st.t = num(1)?.parse().map_err(|_| bad("bad t"))?,
                Some("batch") => {
                    let count = num(1)?.parse().map_err(|_| bad("bad count"))?;
                    let value = num(2)?.parse().map_err(|_| bad("bad value"))?;
                    st.batch_size = RunningScalar { count, value };
                }
                Some("xi") => {
                    let k = num(1)?.parse().map_err(|_| bad("bad k"))?;
                    let i = num(2)?.parse().map_err(|_| bad("bad i"))?;
                    let count = num(3)?.parse().map_err(|_| bad("bad count"))?;
                    let value = num(4)?.parse().map_err(|_| bad("bad value"))?;
                    st.xi_hat.insert((k, i), RunningScalar { count, value });
                }
                Some("psi") => {
                    let k = num(1)?.parse().map_err(|_| bad("bad k"))?;
                    let count = num(2)?.parse().map_err(|_| bad("bad count"))?;
                    let len: usize = num(3)?.parse().map_err(|_| bad("bad length"))?;
                    if f.len() != 4 + len {
                        return Err(bad("psi length mismatch"));
                    }
                    let value = f[4..]
                        .iter()
                        .map(|s| s.parse::<f64>().map_err(|_| bad("bad psi entry")))
                        .collect::<Result<Vec<_>>>()?;
                    st.psi_hat.insert(k, RunningVector { count, value });
                }
                Some(other) => return Err(bad(&format!("unknown record `{other}`"))),
            }
        }
        Ok(st)
    }
}
