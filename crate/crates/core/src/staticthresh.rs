//! Static-threshold policies: the Poisson closed form of their competitive ratio, the
//! expected-demand threshold, and the two-point instance on which the closed form is tight.

use serde::{Deserialize, Serialize};

use crate::crsolver::{exp_lower_bound, solve_cr_ell};
use crate::error::{Error, Result};
use crate::simkit::{opt_topl, reward_curve, DistributionModel, OptMethod};
use crate::specfun::{binom_tails, ln_factorial, poisson_tails};

/// `Σ_{j≤k} γ_j(l) / k` with `γ_j(l) = P(Gamma(j, 1) <= l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticCr {
    pub k: u32,
    pub ell: u32,
    pub value: f64,
}

/// `E[min(Pois(λ), k)] = Σ_{j≤k} P(Pois(λ) >= j)`.
pub fn poisson_capped_mean(lambda: f64, k: u32) -> f64 {
    (1..=k as u64).map(|j| poisson_tails(j, lambda).0).sum()
}

pub fn static_cr(k: u32, ell: u32) -> Result<StaticCr> {
    if k == 0 || ell == 0 {
        return Err(Error::InvalidInput(format!("k and ell must be positive, got k = {k}, ell = {ell}")));
    }
    Ok(StaticCr {
        k,
        ell,
        value: poisson_capped_mean(ell as f64, k) / k as f64,
    })
}

/// `W_{k,l} = (l² / k) P(Pois(l) < k) / P(Pois(l) > k)`.
pub fn worst_weight(k: u32, ell: u32) -> f64 {
    let l = ell as f64;
    let below = poisson_tails(k as u64, l).1;
    let above = poisson_tails(k as u64 + 1, l).0;
    l * l / k as f64 * below / above
}

/// Accept values above `threshold`, and values equal to it with probability `tie_prob`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticRule {
    pub threshold: f64,
    pub tie_prob: f64,
}

/// Two-point law: 1 with probability `1 - 1/n²`, `n W` with probability `1/n²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticWorstCase {
    pub k: u32,
    pub ell: u32,
    pub n: usize,
    pub w: f64,
    /// Threshold 1 with the tie-break giving `l/n` expected acceptances per item.
    pub rule: StaticRule,
}

impl StaticWorstCase {
    pub fn dist(&self) -> Result<DistributionModel> {
        two_point_star(self.n, self.w)
    }
}

fn two_point_star(n: usize, w: f64) -> Result<DistributionModel> {
    let nf = n as f64;
    DistributionModel::two_point(1.0, nf * w, 1.0 / (nf * nf))
}

pub fn build_static_worstcase(k: u32, ell: u32, n: usize) -> Result<StaticWorstCase> {
    if k == 0 || ell == 0 {
        return Err(Error::InvalidInput("k and ell must be positive".into()));
    }
    if n < k.max(ell) as usize || n < 2 {
        return Err(Error::InvalidInput(format!("need n >= max(k, ell, 2), got n = {n}")));
    }
    let w = worst_weight(k, ell);
    let nf = n as f64;
    let h = 1.0 / (nf * nf);
    let tie = (ell as f64 / nf - h) / (1.0 - h);
    Ok(StaticWorstCase {
        k,
        ell,
        n,
        w,
        rule: StaticRule {
            threshold: 1.0,
            tie_prob: tie.clamp(0.0, 1.0),
        },
    })
}

/// `E[min(Pois(λ), k)] (1 + W/λ)`, the limiting static reward against the prophet's `l + W`.
pub fn demand_objective(lambda: f64, k: u32, w: f64) -> f64 {
    poisson_capped_mean(lambda, k) * (1.0 + w / lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGridReport {
    pub k: u32,
    pub ell: u32,
    pub w: f64,
    pub step: f64,
    pub argmax: f64,
    pub max_value: f64,
    pub value_at_ell: f64,
}

/// Maximizes [`demand_objective`] over `λ ∈ [lo, hi]` on a uniform grid.
pub fn lambda_grid_check(k: u32, ell: u32, lo: f64, hi: f64, step: f64) -> Result<LambdaGridReport> {
    if !(lo > 0.0 && hi > lo && step > 0.0) {
        return Err(Error::InvalidInput(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let w = worst_weight(k, ell);
    let count = ((hi - lo) / step).round() as usize;
    let (mut argmax, mut max_value) = (lo, f64::NEG_INFINITY);
    for i in 0..=count {
        let lambda = lo + i as f64 * step;
        let v = demand_objective(lambda, k, w);
        if v > max_value {
            max_value = v;
            argmax = lambda;
        }
    }
    Ok(LambdaGridReport {
        k,
        ell,
        w,
        step,
        argmax,
        max_value,
        value_at_ell: demand_objective(ell as f64, k, w),
    })
}

/// Threshold `F⁻¹(1 - l/n)` with the tie-break making the acceptance probability exactly `l/n`.
pub fn expected_demand_threshold(dist: &DistributionModel, n: usize, ell: usize) -> Result<StaticRule> {
    if ell == 0 || ell > n {
        return Err(Error::InvalidInput(format!("need 1 <= ell <= n, got n = {n}, ell = {ell}")));
    }
    rule_for_probability(dist, ell as f64 / n as f64)
}

/// Static rule accepting each item with probability `q`.
pub fn rule_for_probability(dist: &DistributionModel, q: f64) -> Result<StaticRule> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput(format!("acceptance probability must lie in [0, 1], got {q}")));
    }
    let t = dist.quantile_upper(q);
    let mass = dist.mass_at(t);
    let tie = if mass > 0.0 { ((q - dist.sf(t)) / mass).clamp(0.0, 1.0) } else { 1.0 };
    Ok(StaticRule {
        threshold: t,
        tie_prob: tie,
    })
}

/// Exact `E[Σ selected]`: the number accepted is `min(Bin(n, a), k)` and each accepted
/// value is an independent draw from the law conditioned on acceptance.
pub fn static_reward(dist: &DistributionModel, n: usize, k: usize, rule: StaticRule) -> Result<f64> {
    if !(0.0..=1.0).contains(&rule.tie_prob) {
        return Err(Error::InvalidInput(format!("tie_prob must lie in [0, 1], got {}", rule.tie_prob)));
    }
    let t = rule.threshold;
    let sf = dist.sf(t);
    let mass = dist.mass_at(t);
    let a = sf + rule.tie_prob * mass;
    if a <= 0.0 {
        return Ok(0.0);
    }
    let accepted_value = dist.expected_excess(t) + t * sf + rule.tie_prob * mass * t;
    let count: f64 = (1..=k as u64).map(|j| binom_tails(n as u64, j, a, 1.0 - a).0).sum();
    Ok(count * accepted_value / a)
}

/// `(static_reward / k) / (OPT_{l,n} / l)`.
pub fn static_ratio(dist: &DistributionModel, n: usize, k: usize, ell: usize, rule: StaticRule) -> Result<f64> {
    let alg = static_reward(dist, n, k, rule)?;
    let opt = opt_topl(dist, n, ell, OptMethod::Quadrature)?.value;
    Ok((alg / k as f64) / (opt / ell as f64))
}

/// Best static rule on a discrete law: every atom is tried as the threshold and the
/// tie-break is optimized by golden-section search.
pub fn best_static_rule(dist: &DistributionModel, n: usize, k: usize, ell: usize) -> Result<(StaticRule, f64)> {
    let atoms = dist
        .atom_list()
        .ok_or_else(|| Error::InvalidInput("best_static_rule needs a discrete law".into()))?;
    let opt = opt_topl(dist, n, ell, OptMethod::Quadrature)?.value / ell as f64;
    let ratio = |rule: StaticRule| static_reward(dist, n, k, rule).map(|r| r / k as f64 / opt);
    let mut best = (
        StaticRule {
            threshold: atoms[0].0,
            tie_prob: 1.0,
        },
        f64::NEG_INFINITY,
    );
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for &(x, _) in &atoms {
        let at = |p: f64| {
            ratio(StaticRule {
                threshold: x,
                tie_prob: p,
            })
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut m1 = hi - inv_phi * (hi - lo);
        let mut m2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (at(m1)?, at(m2)?);
        while hi - lo > 1e-12 {
            if f1 < f2 {
                lo = m1;
                m1 = m2;
                f1 = f2;
                m2 = lo + inv_phi * (hi - lo);
                f2 = at(m2)?;
            } else {
                hi = m2;
                m2 = m1;
                f2 = f1;
                m1 = hi - inv_phi * (hi - lo);
                f1 = at(m1)?;
            }
        }
        for p in [0.0, 0.5 * (lo + hi), 1.0] {
            let v = at(p)?;
            if v > best.1 {
                best = (
                    StaticRule {
                        threshold: x,
                        tie_prob: p,
                    },
                    v,
                );
            }
        }
    }
    Ok(best)
}

/// `S_{j,l,n} = Σ_{i=0}^{n-j} (1/n) C(i+j-1, j-1) (l/n)^{j-1} (1 - l/n)^i`.
pub fn s_jln(j: usize, ell: usize, n: usize) -> f64 {
    if j == 0 || j > n {
        return 0.0;
    }
    let nf = n as f64;
    let x = 1.0 - ell as f64 / nf;
    let ln_pref = (j as f64 - 1.0) * (ell as f64 / nf).ln() - nf.ln();
    let mut term = 1.0;
    let mut acc = crate::quad::KahanSum::new();
    for i in 0..=(n - j) {
        acc.add(term);
        term *= (i + j) as f64 / (i + 1) as f64 * x;
    }
    acc.value() * ln_pref.exp()
}

/// Lower bound on `S_{j,l,n}` from the Leibniz expansion before any Taylor step.
pub fn s_jln_leibniz_lower(j: usize, ell: usize, n: usize) -> f64 {
    let l = ell as f64;
    let grow = (l * l / (n as f64 - l)).exp();
    let z = l / (1.0 - l / n as f64);
    (poisson_tails(j as u64, z).0 * grow + 1.0 - grow) / l
}

/// First-order form `γ_j(l)/l - (l - γ_j(l) l - l^j e^{-l} / (j-1)!) / n`.
pub fn s_jln_first_order(j: usize, ell: usize, n: usize) -> f64 {
    let l = ell as f64;
    let g = poisson_tails(j as u64, l).0;
    let tail = (j as f64 * l.ln() - l - ln_factorial(j as u64 - 1)).exp();
    g / l - (l - g * l - tail) / n as f64
}

/// `(l/k) Σ_{j≤k}` of [`s_jln_first_order`], the expected-demand guarantee up to `o(1/n²)`.
pub fn static_lower_bound(k: usize, ell: usize, n: usize) -> f64 {
    let s: f64 = (1..=k).map(|j| s_jln_first_order(j, ell, n)).sum();
    ell as f64 / k as f64 * s
}

/// Expected value collected by the `j`-th selection under the rule of acceptance probability `l/n`.
pub fn per_item_reward(dist: &DistributionModel, n: usize, ell: usize, j: usize) -> Result<f64> {
    let q = ell as f64 / n as f64;
    Ok(n as f64 * reward_curve(dist, q)? * s_jln(j, ell, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticGapReport {
    pub ell: u32,
    pub dynamic_cr: f64,
    pub static_cr: f64,
    pub gap: f64,
}

/// Compares the single-selection dynamic ratio `l/c_l` with its static counterpart `1 - e^{-l}`.
pub fn static_gap_check(ell: u32) -> Result<StaticGapReport> {
    let dynamic = solve_cr_ell(ell, 1e-12)?.cr;
    let stat = exp_lower_bound(ell);
    if !(dynamic > stat) {
        return Err(Error::NonConvergence(format!(
            "dynamic ratio {dynamic} does not exceed static ratio {stat} at ell = {ell}"
        )));
    }
    Ok(StaticGapReport {
        ell,
        dynamic_cr: dynamic,
        static_cr: stat,
        gap: dynamic - stat,
    })
}
