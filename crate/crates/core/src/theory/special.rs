use std::f64::consts::{E, PI};

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WBranch {
    #[default]
    Principal,
    MinusOne,
}

impl std::str::FromStr for WBranch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" | "principal" | "w0" => Ok(WBranch::Principal),
            "-1" | "minus-one" | "minus_one" | "wm1" => Ok(WBranch::MinusOne),
            other => Err(Error::Config(format!("unknown Lambert W branch `{other}`"))),
        }
    }
}

const BRANCH_POINT: f64 = -1.0 / E;

/// Real Lambert W on the chosen branch, by Halley iteration.
pub fn lambert_w(x: f64, branch: WBranch) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("Lambert W of non-finite {x}")));
    }
    // tolerate rounding of -1/e itself
    let x = if x < BRANCH_POINT && x > BRANCH_POINT - 1e-15 { BRANCH_POINT } else { x };
    if x < BRANCH_POINT {
        return Err(Error::Domain(format!("Lambert W argument {x} < -1/e")));
    }
    if branch == WBranch::MinusOne && x >= 0.0 {
        return Err(Error::Domain(format!("W_-1 needs -1/e <= x < 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let q = 2.0 * (E * x + 1.0);
    if q <= 0.0 {
        return Ok(-1.0);
    }
    let p = q.sqrt();
    let mut w = match branch {
        WBranch::Principal if x < -0.25 => -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p,
        WBranch::Principal if x < 3.0 => {
            let l = x.ln_1p();
            l * (1.0 - (1.0 + l).ln() / (2.0 + l))
        }
        WBranch::Principal => {
            let l = x.ln();
            l - l.ln()
        }
        WBranch::MinusOne if x < -0.25 => -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p,
        WBranch::MinusOne => {
            let l = (-x).ln();
            l - (-l).ln()
        }
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        if !step.is_finite() {
            break;
        }
        let next = w - step;
        let done = (next - w).abs() <= 1e-15 * (1.0 + next.abs());
        w = next;
        if done {
            break;
        }
    }
    Ok(match branch {
        WBranch::Principal => w.max(-1.0),
        WBranch::MinusOne => w.min(-1.0),
    })
}

/// `ln((2n+1)!!)`.
pub fn ln_odd_double_factorial(n: u64) -> f64 {
    let n = n as f64;
    ln_gamma(2.0 * n + 2.0) - n * 2f64.ln() - ln_gamma(n + 1.0)
}

/// `ln((2n+1)!! / (2^n n!))`.
pub fn ln_double_factorial_ratio(n: u64) -> f64 {
    ln_odd_double_factorial(n) - n as f64 * 2f64.ln() - ln_gamma(n as f64 + 1.0)
}

pub fn double_factorial_ratio(n: u64) -> f64 {
    ln_double_factorial_ratio(n).exp()
}

pub fn ln_binomial(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// `C(n, 2)` for real `n`.
pub fn choose2(n: f64) -> f64 {
    n * (n - 1.0) / 2.0
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    // V(d) = V(d-2) * 2 pi / d
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut i = 2 + d % 2;
    while i <= d {
        v *= 2.0 * PI / i as f64;
        i += 2;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w(0.0, WBranch::Principal).unwrap(), 0.0);
        assert!((lambert_w(E, WBranch::Principal).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambert_w(-1.0 / E, WBranch::Principal).unwrap() + 1.0).abs() < 1e-7);
        assert!((lambert_w(-1.0 / E, WBranch::MinusOne).unwrap() + 1.0).abs() < 1e-7);
        assert!(lambert_w(-0.5, WBranch::Principal).is_err());
        assert!(lambert_w(0.5, WBranch::MinusOne).is_err());
        let w = lambert_w(-0.1, WBranch::MinusOne).unwrap();
        assert!(w < -3.0 && (w * w.exp() + 0.1).abs() < 1e-15);
    }

    #[test]
    fn ratio_examples() {
        assert!((double_factorial_ratio(5) - 10395.0 / 3840.0).abs() < 1e-13);
        assert!((double_factorial_ratio(0) - 1.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * PI).abs() < 1e-14);
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-14);
    }
}
