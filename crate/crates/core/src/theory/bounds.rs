use super::special::{choose2, double_factorial_ratio, lambert_w, ln_double_factorial_ratio, unit_ball_volume, WBranch};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sparse::{SparseRow, Workspace};

/// Result of a distance bound: a number, or no information.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundValue {
    Value(f64),
    Vacuous,
}

impl BoundValue {
    pub fn value(self) -> Option<f64> {
        match self {
            BoundValue::Value(v) => Some(v),
            BoundValue::Vacuous => None,
        }
    }
}

/// Inputs shared by the latent-space and preferential-attachment bounds.
///
/// `alpha_conc` never appears here: it is derived from `n` and `delta`.
/// `steepness` is the logistic slope of the link model. `dim` is the latent
/// dimension and `max_degree` the graph's maximum degree.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub delta: f64,
    pub k: usize,
    pub dim: usize,
    /// `sum_{n=0}^{M-2} r_n`.
    pub sum_r: f64,
    /// `r_M^max`.
    pub r_max: f64,
    pub eta_2k: f64,
    pub zeta: f64,
    pub rho: f64,
    pub m: usize,
    pub steepness: f64,
    pub max_degree: f64,
}

impl Default for BoundInputs {
    fn default() -> Self {
        BoundInputs {
            n: 1000,
            delta: 0.05,
            k: 2,
            dim: 2,
            sum_r: 0.1,
            r_max: 0.8,
            eta_2k: 1e8,
            zeta: 3.0,
            rho: 0.9999,
            m: 3,
            steepness: 1.0,
            max_degree: 4.0,
        }
    }
}

impl BoundInputs {
    pub fn check(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Domain(format!("delta {} outside (0, 1)", self.delta)));
        }
        if self.k < 1 || self.dim < 1 || self.n < 2 {
            return Err(Error::Domain("need k >= 1, D >= 1, N >= 2".into()));
        }
        if self.eta_2k < 0.0 || !self.eta_2k.is_finite() {
            return Err(Error::Domain(format!("eta {} must be finite and >= 0", self.eta_2k)));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Domain(format!("rho {} outside [0, 1]", self.rho)));
        }
        Ok(())
    }
}

/// Concentration term `sqrt(N ln(1/(2 delta)) / 2) / (N + sqrt(-3 N ln delta))`.
pub fn alpha_conc(n: usize, delta: f64) -> Result<f64> {
    let n = n as f64;
    let a = (1.0 / (2.0 * delta)).ln();
    if !(a > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("ln(1/(2 delta)) must be positive, delta = {delta}")));
    }
    Ok((n * a / 2.0).sqrt() / (n + (-3.0 * n * delta.ln()).sqrt()))
}

/// `(N - sqrt(-2 N ln delta))^(2k-1)`.
pub fn path_normalizer(n: usize, delta: f64, k: usize) -> Result<f64> {
    let n = n as f64;
    let base = n - (-2.0 * n * delta.ln()).sqrt();
    if !(base > 0.0) {
        return Err(Error::Domain(format!("N - sqrt(-2 N ln delta) = {base} is not positive")));
    }
    Ok(base.powi(2 * k as i32 - 1))
}

pub fn iota(b: &BoundInputs) -> Result<f64> {
    Ok(b.eta_2k / path_normalizer(b.n, b.delta, b.k)?)
}

/// `iota - alpha`, the quantity both latent bounds are driven by.
pub fn latent_gap(b: &BoundInputs) -> Result<f64> {
    b.check()?;
    Ok(iota(b)? - alpha_conc(b.n, b.delta)?)
}

/// Unnormalized latent bound for a given `iota - alpha`.
pub fn latent_bound_from_gap(gap: f64, k: usize, dim: usize, sum_r: f64, r_max: f64) -> BoundValue {
    if !(gap > 0.0) {
        return BoundValue::Vacuous;
    }
    let t = gap.powf(2.0 / (dim as f64 * (2 * k - 1) as f64));
    let rad = r_max * r_max - t;
    if !(rad >= 0.0) {
        return BoundValue::Vacuous;
    }
    BoundValue::Value(sum_r + 2.0 * rad.sqrt())
}

pub fn bound_unnormalized(b: &BoundInputs) -> Result<BoundValue> {
    let gap = latent_gap(b)?;
    Ok(latent_bound_from_gap(gap, b.k, b.dim, b.sum_r, b.r_max))
}

/// Normalized latent bound for a given `gamma = iota - alpha`.
pub fn latent_normalized_from_gap(
    gamma: f64,
    k: usize,
    dim: usize,
    sum_r: f64,
    r_max: f64,
    zeta: f64,
    rho: f64,
    n: usize,
) -> Result<BoundValue> {
    if k < 2 {
        return Err(Error::Domain("normalized latent bound needs k >= 2".into()));
    }
    if !(gamma > 0.0) {
        return Ok(BoundValue::Vacuous);
    }
    let kf = k as f64;
    let x = (gamma * choose2(zeta).max(0.0)).powf(1.0 / (dim as f64 * (kf - 1.0))) * rho.powf(n as f64);
    let t = x.powf((2.0 * kf - 2.0) / (2.0 * kf - 1.0));
    let rad = r_max * r_max - t;
    if !(rad >= 0.0) {
        return Ok(BoundValue::Vacuous);
    }
    Ok(BoundValue::Value(sum_r + 2.0 * rad.sqrt()))
}

pub fn bound_normalized(b: &BoundInputs) -> Result<BoundValue> {
    if b.k < 2 {
        return Err(Error::Domain("normalized latent bound needs k >= 2".into()));
    }
    let gamma = latent_gap(b)?;
    latent_normalized_from_gap(gamma, b.k, b.dim, b.sum_r, b.r_max, b.zeta, b.rho, b.n)
}

/// `[ (m R + sqrt(N m^2 ln(1/delta) / 2)) / (N V(1)) ]^(1/D)` with `R = (2N+1)!!/(2^N N!)`.
pub fn ba_radius_term(b: &BoundInputs) -> Result<f64> {
    b.check()?;
    let n = b.n as f64;
    let m = b.m as f64;
    let r = double_factorial_ratio(b.n as u64);
    if !r.is_finite() {
        return Err(Error::Domain(format!("double factorial ratio overflows at N = {}", b.n)));
    }
    let inner = (m * r + (n * m * m / 2.0 * (1.0 / b.delta).ln()).sqrt()) / (n * unit_ball_volume(b.dim));
    Ok(inner.powf(1.0 / b.dim as f64))
}

/// Per-hop term of the unnormalized preferential-attachment bound, so the bound is `2k` times it.
pub fn ba_hop_bracket(b: &BoundInputs) -> Result<f64> {
    if !(b.steepness > 0.0) {
        return Err(Error::Domain(format!("steepness {} must be positive", b.steepness)));
    }
    let n = b.n as f64;
    let r = ln_double_factorial_ratio(b.n as u64).exp();
    let arg = 2.0 * (n - 2.0) / (r + (n * (1.0 / b.delta).ln()).sqrt() / 4.0) - 1.0;
    if !(arg > 0.0) {
        return Err(Error::Domain(format!("log argument {arg} is not positive")));
    }
    Ok(arg.ln() / b.steepness + ba_radius_term(b)?)
}

pub fn ba_bound_unnormalized(b: &BoundInputs) -> Result<f64> {
    Ok(2.0 * b.k as f64 * ba_hop_bracket(b)?)
}

/// `C = D^(2k-1) / (C(zeta, 2) (eta - D^(2k-2) sqrt(N ln(1/delta)) / 4))`, `D` the maximum degree.
pub fn ba_c(b: &BoundInputs) -> Result<f64> {
    b.check()?;
    let n = b.n as f64;
    let k = b.k as i32;
    let pairs = choose2(b.zeta);
    let denom = b.eta_2k - b.max_degree.powi(2 * k - 2) * (n * (1.0 / b.delta).ln()).sqrt() / 4.0;
    if !(pairs > 0.0) || !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "constant C undefined: C(zeta,2) = {pairs}, eta term = {denom}"
        )));
    }
    Ok(b.max_degree.powi(2 * k - 1) / (pairs * denom))
}

/// Normalized preferential-attachment bound from a given constant `c`.
pub fn ba_normalized_from_c(b: &BoundInputs, c: f64, n_inner: usize, branch: WBranch) -> Result<f64> {
    if !(b.steepness > 0.0) {
        return Err(Error::Domain(format!("steepness {} must be positive", b.steepness)));
    }
    if n_inner <= 2 || n_inner + 1 >= b.n {
        return Err(Error::Domain(format!("need 2 < n < N - 1, got n = {n_inner}")));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("C = {c} must be positive")));
    }
    let kk = (n_inner - 2) as f64;
    let mm = (b.n - n_inner - 1) as f64;
    let z = -(mm / kk) * c.powf(1.0 / kk);
    let w = lambert_w(z, branch)?;
    let x = -(kk / mm) * w;
    let arg = x.powf(-1.0 / b.k as f64) - 1.0;
    if !(arg > 0.0) || !arg.is_finite() {
        return Err(Error::Domain(format!("log argument {arg} is not positive")));
    }
    Ok(2.0 * b.k as f64 * (arg.ln() / b.steepness + ba_radius_term(b)?))
}

pub fn ba_bound_normalized(b: &BoundInputs, n_inner: usize, branch: WBranch) -> Result<f64> {
    ba_normalized_from_c(b, ba_c(b)?, n_inner, branch)
}

/// `m (2g-1)!! / (2^g g!)`.
pub fn degree_expectation_ba(gap: usize, m: usize) -> Result<f64> {
    if gap < 1 {
        return Err(Error::Domain("gap must be >= 1".into()));
    }
    // (2g-1)!!/(2^g g!) = ratio(g-1) / (2g)
    let g = gap as u64;
    Ok(m as f64 * (ln_double_factorial_ratio(g - 1) - (2.0 * gap as f64).ln()).exp())
}

/// `(A^l)_{ij}`, the number of length-`l` walks from `i` to `j`.
pub fn count_paths(g: &Graph, i: usize, j: usize, l: usize) -> f64 {
    let mut ws = Workspace::new(g.n());
    let a = l / 2;
    let ri = ws.walk_rows(g, i, l - a, None);
    let rj = ws.walk_rows(g, j, a, None);
    ri[l - a].dot(&rj[a])
}

/// Walk rows of `u` up to length `l`, shared by repeated path counts.
pub fn walk_table(g: &Graph, u: usize, l: usize) -> Vec<SparseRow> {
    Workspace::new(g.n()).walk_rows(g, u, l, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unnormalized_example() {
        let v = bound_unnormalized(&BoundInputs::default()).unwrap().value().unwrap();
        assert!((v - 0.952).abs() < 5e-4, "{v}");
        let small = BoundInputs { eta_2k: 10.0, ..Default::default() };
        assert_eq!(bound_unnormalized(&small).unwrap(), BoundValue::Vacuous);
    }

    #[test]
    fn normalized_limits() {
        let b = BoundInputs { zeta: 1.0, ..Default::default() };
        let v = bound_normalized(&b).unwrap().value().unwrap();
        assert!((v - (b.sum_r + 2.0 * b.r_max)).abs() < 1e-15);
        assert!(bound_normalized(&BoundInputs { k: 1, ..Default::default() }).is_err());
    }

    #[test]
    fn ba_doubles_with_k() {
        let b = BoundInputs::default();
        let one = ba_bound_unnormalized(&BoundInputs { k: 1, ..b.clone() }).unwrap();
        let two = ba_bound_unnormalized(&BoundInputs { k: 2, ..b.clone() }).unwrap();
        assert!((two - 2.0 * one).abs() <= 1e-14 * two.abs());
    }

    #[test]
    fn degree_expectation_examples() {
        assert!((degree_expectation_ba(1, 4).unwrap() - 2.0).abs() < 1e-14);
        assert!((degree_expectation_ba(2, 1).unwrap() - 0.375).abs() < 1e-14);
        let v: Vec<f64> = (1..50).map(|g| degree_expectation_ba(g, 3).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn path_counts() {
        let p = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(count_paths(&p, 0, 2, 2), 1.0);
        let g4 = Graph::from_edges(4, [(0, 1), (0, 2), (1, 2), (2, 3)]).unwrap();
        assert_eq!(count_paths(&g4, 0, 3, 2), 1.0);
        assert_eq!(count_paths(&g4, 0, 0, 0), 1.0);
    }
}
