use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dist::DistributionModel;
use super::{bdp_value, OptEstimate};
use crate::bvp::PartitionSolution;
use crate::error::{Error, Result};
use crate::multibvp::GridSolution;
use crate::specfun::BetaParams;

/// Selection rule evaluated by [`simulate_policy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    /// Single selection with random quantile thresholds from a partition.
    QuantileAlg1 { partition: PartitionSolution },
    /// `k` selections with one partition layer per selection index.
    QuantileAlg2 { grid: GridSolution },
    /// Accept values above `threshold`, and values equal to it with probability `tie_prob`.
    StaticThreshold { threshold: f64, tie_prob: f64 },
    /// The optimal dynamic program for `k` selections.
    BdpOptimal { k: usize },
}

/// Monte Carlo estimate of the online reward against the top-`l` benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    /// `E[Σ selected / k]`.
    pub mean_alg: f64,
    pub se_alg: f64,
    /// `E[Σ_{i≤l} X_(i) / l]`.
    pub mean_benchmark: f64,
    pub se_benchmark: f64,
    pub ratio: f64,
    /// Delta-method standard error of `ratio`.
    pub ratio_se: f64,
    /// Mean value of the `j`-th selected item (0 when fewer were selected).
    pub slot_means: Vec<f64>,
    pub slot_se: Vec<f64>,
}

const CHUNK: u64 = 4096;

/// Running first and second moments, merged in a fixed order.
#[derive(Debug, Clone)]
struct Moments {
    count: f64,
    mean: Vec<f64>,
    /// Upper-triangular co-moment sums, row-major.
    co: Vec<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; dim],
            co: vec![0.0; dim * dim],
        }
    }

    fn push(&mut self, x: &[f64]) {
        let d = self.mean.len();
        self.count += 1.0;
        let mut delta = vec![0.0; d];
        for i in 0..d {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / self.count;
        }
        for i in 0..d {
            let after = x[i] - self.mean[i];
            for j in i..d {
                self.co[i * d + j] += delta[j] * after;
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        let d = self.mean.len();
        let n = self.count + other.count;
        let delta: Vec<f64> = (0..d).map(|i| other.mean[i] - self.mean[i]).collect();
        let w = self.count * other.count / n;
        for i in 0..d {
            for j in i..d {
                self.co[i * d + j] += other.co[i * d + j] + delta[i] * delta[j] * w;
            }
        }
        for i in 0..d {
            self.mean[i] += delta[i] * other.count / n;
        }
        self.count = n;
    }

    fn cov(&self, i: usize, j: usize) -> f64 {
        let d = self.mean.len();
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        if self.count < 2.0 {
            return 0.0;
        }
        self.co[a * d + b] / (self.count - 1.0)
    }
}

enum Prepared<'a> {
    Alg1 {
        eps: &'a [f64],
        b: &'a [f64],
        beta: Option<BetaParams>,
    },
    Alg2 {
        grid: &'a GridSolution,
        beta: BetaParams,
    },
    Static {
        cutoff: f64,
    },
    Bdp {
        k: usize,
        cutoff: Vec<f64>,
    },
}

/// Accepts item `i` (1-based) with upper-tail uniform `v` under a truncated Beta quantile.
fn quantile_accept<R: Rng>(eps: &[f64], b: &[f64], beta: BetaParams, i: usize, v: f64, rng: &mut R) -> bool {
    let (lo, hi) = (eps[i - 1], eps[i]);
    if v <= lo {
        return true;
    }
    if v > hi {
        return false;
    }
    let (b_lo, b_hi) = (b[i - 1], b[i].min(1.0));
    if !(b_hi > b_lo) {
        return false;
    }
    let w = b_lo + (b_hi - b_lo) * rng.gen::<f64>();
    beta.cdf(v) <= w
}

impl Prepared<'_> {
    fn run<R: Rng>(&self, v: &[f64], k: usize, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        let n = v.len();
        match self {
            Prepared::Alg1 { eps, b, beta } => {
                for i in 1..=n {
                    let take = match beta {
                        None => true,
                        Some(beta) => quantile_accept(eps, b, *beta, i, v[i - 1], rng),
                    };
                    if take {
                        out.push(v[i - 1]);
                        return;
                    }
                }
            }
            Prepared::Alg2 { grid, beta } => {
                for i in 1..=n {
                    let j = out.len() + 1;
                    if quantile_accept(&grid.eps[j - 1], &grid.b[j - 1], *beta, i, v[i - 1], rng) {
                        out.push(v[i - 1]);
                        if out.len() == k {
                            return;
                        }
                    }
                }
            }
            Prepared::Static { cutoff } => {
                for &x in v {
                    if x <= *cutoff {
                        out.push(x);
                        if out.len() == k {
                            return;
                        }
                    }
                }
            }
            Prepared::Bdp { k: kk, cutoff } => {
                for (i, &x) in v.iter().enumerate() {
                    let remaining = n - i;
                    let budget = kk - out.len();
                    if x <= cutoff[remaining * (kk + 1) + budget] {
                        out.push(x);
                        if out.len() == *kk {
                            return;
                        }
                    }
                }
            }
        }
    }
}

fn check_shape(n: usize, k: usize, ell: usize, trials: u64) -> Result<()> {
    if n == 0 || k == 0 || ell == 0 {
        return Err(Error::InvalidInput("n, k and ell must be positive".into()));
    }
    if k > n || ell > n {
        return Err(Error::InvalidInput(format!("need k, ell <= n, got n = {n}, k = {k}, ell = {ell}")));
    }
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be positive".into()));
    }
    Ok(())
}

fn prepare<'a>(dist: &DistributionModel, n: usize, k: usize, policy: &'a PolicySpec) -> Result<Prepared<'a>> {
    match policy {
        PolicySpec::QuantileAlg1 { partition } => {
            if partition.n != n || k != 1 {
                return Err(Error::ShapeMismatch(format!(
                    "single-selection partition for n = {} used with n = {n}, k = {k}",
                    partition.n
                )));
            }
            let beta = if partition.n == partition.ell {
                None
            } else {
                Some(BetaParams::new(partition.ell as u64, (n - partition.ell) as u64)?)
            };
            Ok(Prepared::Alg1 {
                eps: &partition.eps,
                b: &partition.b,
                beta,
            })
        }
        PolicySpec::QuantileAlg2 { grid } => {
            if grid.n != n || grid.k != k || grid.n == grid.ell {
                return Err(Error::ShapeMismatch(format!(
                    "grid for n = {}, k = {} used with n = {n}, k = {k}",
                    grid.n, grid.k
                )));
            }
            Ok(Prepared::Alg2 {
                grid,
                beta: BetaParams::new(grid.ell as u64, (n - grid.ell) as u64)?,
            })
        }
        PolicySpec::StaticThreshold { threshold, tie_prob } => {
            if !threshold.is_finite() || !(0.0..=1.0).contains(tie_prob) {
                return Err(Error::InvalidInput(
                    "static threshold must be finite with tie probability in [0, 1]".into(),
                ));
            }
            let above = dist.sf(*threshold);
            let at = dist.mass_at(*threshold);
            Ok(Prepared::Static {
                cutoff: above + tie_prob * at,
            })
        }
        PolicySpec::BdpOptimal { k: kk } => {
            if *kk != k {
                return Err(Error::ShapeMismatch(format!("dynamic program for k = {kk} used with k = {k}")));
            }
            let table = bdp_value(dist, n, k)?;
            let mut cutoff = vec![1.0; (n + 1) * (k + 1)];
            for remaining in 1..=n {
                for budget in 1..=k {
                    let g = table.gap(remaining, budget);
                    cutoff[remaining * (k + 1) + budget] = if g <= 0.0 { 1.0 } else { dist.sf_incl(g) };
                }
            }
            Ok(Prepared::Bdp { k, cutoff })
        }
    }
}

fn top_sum(dist: &DistributionModel, v: &mut [f64], ell: usize) -> f64 {
    if ell < v.len() {
        v.select_nth_unstable_by(ell - 1, f64::total_cmp);
    }
    v[..ell].iter().map(|&x| dist.quantile_upper(x)).sum()
}

/// Runs `trials` independent trials; trial `t` uses ChaCha8 stream `t` of `seed`,
/// and per-chunk statistics are merged in chunk order, so results do not depend
/// on how chunks are scheduled.
fn run_trials<F>(trials: u64, seed: u64, dim: usize, body: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng, &mut Vec<f64>) + Sync,
{
    let base = ChaCha8Rng::seed_from_u64(seed);
    let chunks = trials.div_ceil(CHUNK);
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(chunks as usize)
        .max(1);
    let work = |c: u64| -> Moments {
        let mut m = Moments::new(dim);
        let mut row = vec![0.0; dim];
        for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
            let mut rng = base.clone();
            rng.set_stream(t);
            body(&mut rng, &mut row);
            m.push(&row);
        }
        m
    };
    let mut parts: Vec<Option<Moments>> = vec![None; chunks as usize];
    if workers == 1 {
        for c in 0..chunks {
            parts[c as usize] = Some(work(c));
        }
    } else {
        let results: Vec<Vec<(u64, Moments)>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let work = &work;
                    s.spawn(move || {
                        (w as u64..chunks)
                            .step_by(workers)
                            .map(|c| (c, work(c)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for (c, m) in results.into_iter().flatten() {
            parts[c as usize] = Some(m);
        }
    }
    let mut total = Moments::new(dim);
    for m in parts.into_iter().flatten() {
        total.merge(&m);
    }
    total
}

/// Monte Carlo estimate of `E[Σ_{i≤l} X_(i)]`.
pub(super) fn monte_carlo_topl(
    dist: &DistributionModel,
    n: usize,
    ell: usize,
    trials: u64,
    seed: u64,
) -> Result<OptEstimate> {
    check_shape(n, 1, ell, trials)?;
    let m = run_trials(trials, seed, 1, |rng, row| {
        let mut v: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
        row[0] = top_sum(dist, &mut v, ell);
    });
    Ok(OptEstimate {
        value: m.mean[0],
        se: (m.cov(0, 0) / m.count).sqrt(),
    })
}

/// Seeded Monte Carlo run of `policy` on `n` i.i.d. draws with common random numbers
/// for the policy and the top-`l` benchmark.
pub fn simulate_policy(
    dist: &DistributionModel,
    n: usize,
    k: usize,
    ell: usize,
    policy: &PolicySpec,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    check_shape(n, k, ell, trials)?;
    let prepared = prepare(dist, n, k, policy)?;
    let dim = 2 + k;
    let m = run_trials(trials, seed, dim, |rng, row| {
        let mut v: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
        let mut picked = Vec::with_capacity(k);
        prepared.run(&v, k, rng, &mut picked);
        let mut alg = 0.0;
        for j in 0..k {
            let x = picked.get(j).map_or(0.0, |&u| dist.quantile_upper(u));
            row[2 + j] = x;
            alg += x;
        }
        row[0] = alg / k as f64;
        row[1] = top_sum(dist, &mut v, ell) / ell as f64;
    });
    let count = m.count;
    let (ma, mb) = (m.mean[0], m.mean[1]);
    let (va, vb, cab) = (m.cov(0, 0), m.cov(1, 1), m.cov(0, 1));
    let ratio = ma / mb;
    let ratio_se = if ma != 0.0 {
        let rel = (va / (ma * ma) + vb / (mb * mb) - 2.0 * cab / (ma * mb)).max(0.0);
        ratio.abs() * (rel / count).sqrt()
    } else {
        (va / count).sqrt() / mb
    };
    Ok(SimulationReport {
        trials,
        seed,
        n,
        k,
        ell,
        mean_alg: ma,
        se_alg: (va / count).sqrt(),
        mean_benchmark: mb,
        se_benchmark: (vb / count).sqrt(),
        ratio,
        ratio_se,
        slot_means: (0..k).map(|j| m.mean[2 + j]).collect(),
        slot_se: (0..k).map(|j| (m.cov(2 + j, 2 + j) / count).sqrt()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_matches_direct() {
        let xs: Vec<[f64; 2]> = (0..100).map(|i| [i as f64, (i * i % 7) as f64]).collect();
        let mut all = Moments::new(2);
        for x in &xs {
            all.push(x);
        }
        let mut a = Moments::new(2);
        let mut b = Moments::new(2);
        for x in &xs[..37] {
            a.push(x);
        }
        for x in &xs[37..] {
            b.push(x);
        }
        a.merge(&b);
        for i in 0..2 {
            assert!((a.mean[i] - all.mean[i]).abs() < 1e-12);
            for j in i..2 {
                assert!((a.cov(i, j) - all.cov(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_distribution_ratio_one() {
        let d = DistributionModel::atoms(vec![1.0], vec![1.0]).unwrap();
        let p = PolicySpec::StaticThreshold {
            threshold: 1.0,
            tie_prob: 1.0,
        };
        let r = simulate_policy(&d, 5, 2, 2, &p, 1000, 7).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.ratio_se, 0.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let d = DistributionModel::uniform(0.0, 1.0).unwrap();
        let p = PolicySpec::BdpOptimal { k: 2 };
        assert!(matches!(simulate_policy(&d, 5, 1, 1, &p, 10, 1), Err(Error::ShapeMismatch(_))));
    }
}
