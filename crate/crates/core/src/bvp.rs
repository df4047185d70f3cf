//! Finite-`n` single-selection boundary value problem, solved by shooting on `b_1`.
//!
//! The grid `b_i = β_{l,n-l}(ε_i)` satisfies
//! `b_{i+1} = b_i - (l/n) β_{l+1,n-l}(β⁻¹_{l,n-l}(b_i)) + b_1` with `b_0 = 0` and
//! `b_n = 1`; the thresholds `ε_i` then equalize every `ρ_i` to `n / c_l(n)`.

use crate::error::{Error, Result};
use crate::specfun::BetaParams;

/// `x ↦ β_{l+1,n-l}(β⁻¹_{l,n-l}(x))`, extended by 0 below 0 and by 1 above 1.
#[derive(Debug, Clone, Copy)]
pub struct BetaComposition {
    inner: BetaParams,
    outer: BetaParams,
}

impl BetaComposition {
    /// Requires `n > l >= 1`.
    pub fn new(n: usize, ell: usize) -> Result<Self> {
        if ell == 0 || n <= ell {
            return Err(Error::InvalidInput(format!(
                "composition needs n > ell >= 1, got n = {n}, ell = {ell}"
            )));
        }
        let m = (n - ell) as u64;
        Ok(Self {
            inner: BetaParams::new(ell as u64, m)?,
            outer: BetaParams::new(ell as u64 + 1, m)?,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_warm(x, None).0
    }

    /// Returns `(composition, ε)`; `guess` warm-starts the inner inverse.
    pub fn eval_warm(&self, x: f64, guess: Option<f64>) -> (f64, f64) {
        if x <= 0.0 {
            return (0.0, 0.0);
        }
        if x >= 1.0 {
            return (1.0, 1.0);
        }
        let eps = match guess {
            Some(g) => self.inner.inv_from(x, g),
            None => self.inner.inv(x),
        };
        (self.outer.cdf(eps), eps)
    }

    pub fn inner(&self) -> BetaParams {
        self.inner
    }
}

/// Solved grid of single-selection quantile thresholds.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PartitionSolution {
    pub n: usize,
    pub ell: usize,
    /// `b_0..b_n`.
    pub b: Vec<f64>,
    /// `ε_0..ε_n`.
    pub eps: Vec<f64>,
    /// `n b_1`.
    pub c_ell_n: f64,
    /// `|b_n - 1|` of the accepted shot.
    pub residual: f64,
}

impl PartitionSolution {
    /// Competitive-ratio guarantee `l / c_l(n)` of the equalized partition.
    pub fn ratio_bound(&self) -> f64 {
        self.ell as f64 / self.c_ell_n
    }

    /// Arbitrary (not necessarily equalized) partition from thresholds `ε_0..ε_n`.
    pub fn from_eps(n: usize, ell: usize, eps: Vec<f64>) -> Result<Self> {
        if ell == 0 || n < ell {
            return Err(Error::InvalidInput(format!("need n >= ell >= 1, got n = {n}, ell = {ell}")));
        }
        if eps.len() != n + 1 {
            return Err(Error::InvalidInput(format!("expected {} thresholds, got {}", n + 1, eps.len())));
        }
        if eps[0] != 0.0 || eps[n] != 1.0 || eps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "thresholds must increase strictly from 0 to 1".into(),
            ));
        }
        let b: Vec<f64> = if n == ell {
            eps.iter().map(|&e| if e > 0.0 { 1.0 } else { 0.0 }).collect()
        } else {
            let p = BetaParams::new(ell as u64, (n - ell) as u64)?;
            eps.iter().map(|&e| p.cdf(e)).collect()
        };
        let c = n as f64 * b[1];
        Ok(Self {
            n,
            ell,
            b,
            eps,
            c_ell_n: c,
            residual: 0.0,
        })
    }
}

/// Per-step quantities of the performance identity.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RhoCertificate {
    pub alpha: Vec<f64>,
    pub a: Vec<f64>,
    pub rho: Vec<f64>,
    pub max_spread: f64,
}

/// One step of the difference equation.
pub fn step_recurrence(b_i: f64, b_1: f64, n: usize, ell: usize) -> Result<f64> {
    let comp = BetaComposition::new(n, ell)?;
    Ok(b_i - ell as f64 / n as f64 * comp.eval(b_i) + b_1)
}

/// Runs the recurrence from `b_1` and returns `b_n`, stopping early once the
/// trajectory passes 1 (it is non-decreasing, so the sign is then settled).
pub fn shoot(n: usize, ell: usize, b1: f64) -> Result<f64> {
    let comp = BetaComposition::new(n, ell)?;
    Ok(1.0 + shoot_with(&comp, n, ell, b1, None))
}

/// Returns `b_n - 1`. Past `b = 1/2` the state is the complement `d = 1 - b`,
/// whose increments `(b_1 - l/n) + (l/n)(1 - β_{l+1,n-l}(ε))` stay
/// relative-accurate where `b` itself would round them away.
fn shoot_with(
    comp: &BetaComposition,
    n: usize,
    ell: usize,
    b1: f64,
    mut record: Option<(&mut Vec<f64>, &mut Vec<f64>)>,
) -> f64 {
    let step = ell as f64 / n as f64;
    let (inner, outer) = (comp.inner, comp.outer);
    let mut b = b1;
    let mut d = 1.0 - b1;
    let mut upper = false;
    let mut eps_prev: Option<f64> = None;
    if let Some((bs, es)) = record.as_mut() {
        bs.clear();
        es.clear();
        bs.push(0.0);
        es.push(0.0);
    }
    for _ in 1..n {
        if !upper && b > 0.5 {
            upper = true;
            d = 1.0 - b;
        }
        let (inc, e) = if upper {
            let e = match eps_prev {
                Some(g) if d > 0.0 => inner.inv_sf_from(d, g),
                _ => inner.inv_sf(d),
            };
            ((b1 - step) + step * outer.tails(e).1, e)
        } else {
            let (c, e) = comp.eval_warm(b, eps_prev);
            (b1 - step * c, e)
        };
        let past = if upper { d < 0.0 } else { b > 1.0 };
        if let Some((bs, es)) = record.as_mut() {
            bs.push(if upper { 1.0 - d } else { b });
            es.push(e);
        } else if past {
            return if upper { -d } else { b - 1.0 };
        }
        eps_prev = Some(e);
        if upper {
            d -= inc;
        } else {
            b += inc;
        }
    }
    let f = if upper { -d } else { b - 1.0 };
    if let Some((bs, es)) = record.as_mut() {
        bs.push(1.0 + f);
        es.push(1.0);
    }
    f
}

const MAX_SHOTS: usize = 60;

/// Solves for the equalized partition and `c_l(n) = n b_1`.
pub fn solve_partition(n: usize, ell: usize, tol: f64) -> Result<PartitionSolution> {
    if ell == 0 || n < ell {
        return Err(Error::InvalidInput(format!("need n >= ell >= 1, got n = {n}, ell = {ell}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    if n == ell {
        // Every item is needed by the benchmark: take the first one.
        let mut b = vec![1.0; n + 1];
        b[0] = 0.0;
        let eps = b.clone();
        return Ok(PartitionSolution {
            n,
            ell,
            b,
            eps,
            c_ell_n: n as f64,
            residual: 0.0,
        });
    }
    let comp = BetaComposition::new(n, ell)?;
    let nf = n as f64;
    let mut lo = ell as f64 / nf;
    let mut hi = (ell as f64 + 1.0) / nf;
    let f_lo = shoot_with(&comp, n, ell, lo, None);
    let f_hi = shoot_with(&comp, n, ell, hi, None);
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::Bracket(format!(
            "b_n - 1 = ({f_lo:e}, {f_hi:e}) at the bracket ends for n = {n}, ell = {ell}"
        )));
    }
    let (mut best, mut best_r) = if -f_lo < f_hi { (lo, -f_lo) } else { (hi, f_hi) };
    for _ in 0..MAX_SHOTS {
        if best_r <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = shoot_with(&comp, n, ell, mid, None);
        if f.abs() < best_r {
            best = mid;
            best_r = f.abs();
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut b = Vec::with_capacity(n + 1);
    let mut eps = Vec::with_capacity(n + 1);
    let residual = shoot_with(&comp, n, ell, best, Some((&mut b, &mut eps))).abs();
    if residual > tol.max(1e-9) {
        return Err(Error::NonConvergence(format!(
            "shooting stalled at |b_n - 1| = {residual:e} for n = {n}, ell = {ell}"
        )));
    }
    Ok(PartitionSolution {
        n,
        ell,
        b,
        eps,
        c_ell_n: nf * best,
        residual,
    })
}

/// Recomputes `α_i`, `a_i` and `ρ_i` from the thresholds and reports their spread.
pub fn certify_equalization(sol: &PartitionSolution) -> Result<RhoCertificate> {
    let n = sol.n;
    let ell = sol.ell;
    if sol.b.len() != n + 1 || sol.eps.len() != n + 1 {
        return Err(Error::InvalidInput("partition vectors have the wrong length".into()));
    }
    if n == ell {
        let alpha = (1..=n).map(|i| sol.b[i] - sol.b[i - 1]).collect();
        // Only the first item is ever offered.
        return Ok(RhoCertificate {
            alpha,
            a: vec![0.0; n],
            rho: vec![1.0 / (sol.b[1] - sol.b[0])],
            max_spread: 0.0,
        });
    }
    // differences of b near 1 lose the tiny late increments, so both masses
    // come from whichever tail keeps them relative-accurate
    let mass = |p: &BetaParams, i: usize| {
        let (c0, s0) = p.tails(sol.eps[i - 1]);
        let (c1, s1) = p.tails(sol.eps[i]);
        if c0 < 0.5 { c1 - c0 } else { s0 - s1 }
    };
    let base = BetaParams::new(ell as u64, (n - ell) as u64)?;
    let shifted = BetaParams::new(ell as u64, (n + 1 - ell) as u64)?;
    let scale = (n - ell) as f64 / n as f64;
    let mut alpha: Vec<f64> = (1..=n).map(|i| mass(&base, i)).collect();
    if sol.residual != 0.0 {
        // a shot that misses 1 keeps its own last increment
        let step = ell as f64 / n as f64;
        let outer = BetaParams::new(ell as u64 + 1, (n - ell) as u64)?;
        alpha[n - 1] = (sol.b[1] - step) + step * outer.tails(sol.eps[n - 1]).1;
    }
    let a: Vec<f64> = (1..=n).map(|i| scale * mass(&shifted, i)).collect();
    let mut rho = Vec::with_capacity(n);
    let mut prod = 1.0;
    for i in 0..n {
        rho.push(prod / alpha[i]);
        prod *= a[i] / alpha[i];
    }
    let max_spread = rho
        .iter()
        .map(|r| ((r - rho[0]) / rho[0]).abs())
        .fold(0.0, f64::max);
    Ok(RhoCertificate {
        alpha,
        a,
        rho,
        max_spread,
    })
}
