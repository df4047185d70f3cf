//! Distribution models, benchmark functionals, the optimal dynamic program, and
//! seeded Monte Carlo evaluation of selection policies.

mod dist;
mod policy;
mod worstcase;

pub use dist::{doubling_transform, DistributionModel, ModelSpec};
pub use policy::{simulate_policy, PolicySpec, SimulationReport};
pub use worstcase::WorstCaseFq;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, adaptive_simpson_panels, KahanSum};
use crate::specfun::{binom_tails, BetaParams};

/// `R(q) = ∫_0^q F⁻¹(1 - θ) dθ`, the reward of accepting exactly the top `q` of the mass.
pub fn reward_curve(dist: &DistributionModel, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput(format!("q must lie in [0, 1], got {q}")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let t = dist.quantile_upper(q);
    Ok(q * t + dist.expected_excess(t))
}

/// How `E[Σ_{i≤l} X_(i)]` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptMethod {
    /// `n ∫ F⁻¹(1-θ) (1 - β_{l,n-l}(θ)) dθ`, the reward curve against the Beta density.
    Quadrature,
    /// `∫ E[min(Bin(n, P(X > x)), l)] dx`.
    Survival,
    MonteCarlo { trials: u64, seed: u64 },
}

/// Benchmark value with a standard error for Monte Carlo estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptEstimate {
    pub value: f64,
    pub se: f64,
}

fn capped_binomial_mean(n: usize, ell: usize, s: f64, keep: f64) -> f64 {
    (1..=ell as u64).map(|i| binom_tails(n as u64, i, s, keep).0).sum()
}

/// `E[Σ_{i≤l} X_(i)]` over `n` draws.
pub fn opt_topl(dist: &DistributionModel, n: usize, ell: usize, method: OptMethod) -> Result<OptEstimate> {
    if ell == 0 || n < ell {
        return Err(Error::InvalidInput(format!("need n >= ell >= 1, got n = {n}, ell = {ell}")));
    }
    let exact = |value: f64| Ok(OptEstimate { value, se: 0.0 });
    if n == ell && !matches!(method, OptMethod::MonteCarlo { .. }) {
        return exact(n as f64 * dist.mean());
    }
    match method {
        OptMethod::Quadrature => {
            if let Some(atoms) = dist.atom_list() {
                return exact(opt_quadrature_atoms(&atoms, n, ell)?);
            }
            exact(opt_quadrature_smooth(dist, n, ell)?)
        }
        OptMethod::Survival => {
            if let Some(atoms) = dist.atom_list() {
                let mut acc = KahanSum::new();
                acc.add(ell as f64 * atoms[0].0);
                let mut upper = 1.0;
                for w in atoms.windows(2) {
                    upper -= w[0].1;
                    let s = upper.max(0.0);
                    acc.add((w[1].0 - w[0].0) * capped_binomial_mean(n, ell, s, 1.0 - s));
                }
                return exact(acc.value());
            }
            if let Some((fq, e)) = dist.worstcase() {
                return exact(fq.opt_topl(n, ell, e));
            }
            exact(opt_survival_smooth(dist, n, ell))
        }
        OptMethod::MonteCarlo { trials, seed } => policy::monte_carlo_topl(dist, n, ell, trials, seed),
    }
}

fn opt_quadrature_atoms(atoms: &[(f64, f64)], n: usize, ell: usize) -> Result<f64> {
    let lower = BetaParams::new(ell as u64, (n - ell) as u64)?;
    let upper_shape = BetaParams::new(ell as u64 + 1, (n - ell) as u64)?;
    let ratio = ell as f64 / n as f64;
    let g = |theta: f64| theta * lower.sf(theta) + ratio * upper_shape.cdf(theta);
    let mut acc = KahanSum::new();
    let mut hi = 1.0;
    let mut g_hi = g(1.0);
    for &(x, p) in atoms {
        let lo = (hi - p).max(0.0);
        let g_lo = g(lo);
        acc.add(x * (g_hi - g_lo));
        hi = lo;
        g_hi = g_lo;
    }
    Ok(n as f64 * acc.value())
}

fn opt_quadrature_smooth(dist: &DistributionModel, n: usize, ell: usize) -> Result<f64> {
    let beta = BetaParams::new(ell as u64, (n - ell) as u64)?;
    let centre = (n as f64 / ell as f64).ln();
    let mut pts: Vec<f64> = vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0 + centre];
    for d in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0] {
        pts.push(centre + d);
    }
    if let Some((fq, e)) = dist.worstcase() {
        let jump = -(-(-e * fq.nu_q()).exp_m1()).ln();
        pts.push(jump);
    }
    pts.retain(|&s| s >= 0.0 && s.is_finite());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let f = |s: f64| {
        let theta = (-s).exp();
        dist.quantile_upper(theta) * beta.sf(theta) * theta
    };
    let scale = ell as f64 * dist.mean() / n as f64;
    Ok(n as f64 * adaptive_simpson_panels(f, &pts, 1e-13 * scale.max(1e-300)))
}

fn opt_survival_smooth(dist: &DistributionModel, n: usize, ell: usize) -> f64 {
    let mut xs: Vec<f64> = (0..=60).map(|m| dist.quantile_upper(0.5f64.powi(m))).collect();
    xs.push(dist.quantile_upper(1.0));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let f = |x: f64| {
        let s = dist.sf(x);
        capped_binomial_mean(n, ell, s, dist.cdf(x))
    };
    let mut acc = KahanSum::new();
    acc.add(ell as f64 * xs[0]);
    for w in xs.windows(2) {
        let tol = 1e-14 * ell as f64 * (w[1] - w[0]).abs().max(1e-300);
        acc.add(adaptive_simpson(f, w[0], w[1], tol));
    }
    acc.value()
}

/// Optimal dynamic-program values `V_i^j` for selecting `j` of the last `i` items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdpSolution {
    pub n: usize,
    pub k: usize,
    /// `values[i][j] = V_i^j`.
    pub values: Vec<Vec<f64>>,
}

impl BdpSolution {
    pub fn value(&self) -> f64 {
        self.values[self.n][self.k]
    }

    /// Acceptance threshold with `remaining` items left (current included) and budget `budget`.
    pub fn gap(&self, remaining: usize, budget: usize) -> f64 {
        let row = &self.values[remaining - 1];
        row[budget] - row[budget - 1]
    }

    /// `(V_n^k / k) / (opt / l)`.
    pub fn ratio(&self, opt: f64, ell: usize) -> f64 {
        (self.value() / self.k as f64) / (opt / ell as f64)
    }
}

/// `V_i^j = V_{i-1}^j + E[(X - (V_{i-1}^j - V_{i-1}^{j-1}))^+]`.
pub fn bdp_value(dist: &DistributionModel, n: usize, k: usize) -> Result<BdpSolution> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::InvalidInput(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    let mean = dist.mean();
    let mut values = vec![vec![0.0; k + 1]];
    for i in 1..=n {
        let prev = &values[i - 1];
        let mut row = vec![0.0; k + 1];
        for j in 1..=k {
            let gap = prev[j] - prev[j - 1];
            let excess = if gap <= 0.0 { mean - gap } else { dist.expected_excess(gap) };
            row[j] = prev[j] + excess;
        }
        values.push(row);
    }
    Ok(BdpSolution { n, k, values })
}

/// Serializable record of the hard instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseInstance {
    pub ell: usize,
    pub q: f64,
    pub c_ell: f64,
    /// `γ_l⁻¹(1 - y(q))`.
    pub nu_q: f64,
    pub p: f64,
    pub h: f64,
    pub r_q: f64,
    /// `|t(∞) - 1|`.
    pub horizon_defect: f64,
    /// `(t, y(t), r(t))` on a uniform mesh.
    pub trajectory: Vec<(f64, f64, f64)>,
    /// `(x, F_q(x))` breakpoints of the CDF; the last two are `(r(q), p)` and `(H, 1)`.
    pub cdf_table: Vec<(f64, f64)>,
}

pub fn build_worstcase_instance(ell: usize, q: f64, mesh: usize) -> Result<WorstCaseInstance> {
    let fq = WorstCaseFq::new(ell, q)?;
    Ok(describe_worstcase(&fq, mesh))
}

pub fn describe_worstcase(fq: &WorstCaseFq, mesh: usize) -> WorstCaseInstance {
    let mut cdf_table: Vec<(f64, f64)> = (0..=mesh.max(1))
        .rev()
        .map(|i| {
            let nu = fq.nu_q() + 40.0 * i as f64 / mesh.max(1) as f64;
            (fq.r(nu), (-nu).exp())
        })
        .collect();
    cdf_table.push((fq.h(), 1.0));
    WorstCaseInstance {
        ell: fq.ell(),
        q: fq.q(),
        c_ell: fq.c_ell(),
        nu_q: fq.nu_q(),
        p: fq.p(),
        h: fq.h(),
        r_q: fq.r_q(),
        horizon_defect: fq.horizon_defect(),
        trajectory: fq.trajectory(mesh),
        cdf_table,
    }
}

/// Optimal online ratio against the top-`l` benchmark on `n` draws of `F_q^{1/n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseRatio {
    pub ell: usize,
    pub q: f64,
    pub n: usize,
    pub online: f64,
    pub benchmark: f64,
    pub ratio: f64,
}

pub fn worstcase_bdp_ratio(ell: usize, q: f64, n: usize) -> Result<WorstCaseRatio> {
    let base = DistributionModel::worstcase_fq(ell, q)?;
    let dist = DistributionModel::power(&base, 1.0 / n as f64)?;
    let bdp = bdp_value(&dist, n, 1)?;
    let opt = opt_topl(&dist, n, ell, OptMethod::Survival)?.value;
    Ok(WorstCaseRatio {
        ell,
        q,
        n,
        online: bdp.value(),
        benchmark: opt / ell as f64,
        ratio: bdp.ratio(opt, ell),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_curve_uniform() {
        let u = DistributionModel::uniform(0.0, 1.0).unwrap();
        assert!((reward_curve(&u, 0.5).unwrap() - 0.375).abs() < 1e-15);
        assert!((reward_curve(&u, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(reward_curve(&u, 0.0).unwrap(), 0.0);
        assert!(reward_curve(&u, 1.5).is_err());
    }

    #[test]
    fn opt_uniform_maximum() {
        let u = DistributionModel::uniform(0.0, 1.0).unwrap();
        for m in [OptMethod::Quadrature, OptMethod::Survival] {
            let v = opt_topl(&u, 9, 1, m).unwrap().value;
            assert!((v - 0.9).abs() < 1e-10, "{m:?}: {v}");
        }
        assert!((opt_topl(&u, 4, 4, OptMethod::Quadrature).unwrap().value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn opt_atoms_routes_agree() {
        let d = DistributionModel::atoms(vec![0.0, 1.0, 3.0], vec![0.5, 0.3, 0.2]).unwrap();
        let a = opt_topl(&d, 6, 2, OptMethod::Quadrature).unwrap().value;
        let b = opt_topl(&d, 6, 2, OptMethod::Survival).unwrap().value;
        assert!((a - b).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn bdp_small_cases() {
        let u = DistributionModel::uniform(0.0, 1.0).unwrap();
        assert!((bdp_value(&u, 1, 1).unwrap().value() - 0.5).abs() < 1e-15);
        assert!((bdp_value(&u, 2, 1).unwrap().value() - 0.625).abs() < 1e-15);
        assert!((bdp_value(&u, 3, 3).unwrap().value() - 1.5).abs() < 1e-15);
        assert!(bdp_value(&u, 2, 3).is_err());
    }
}
