//! Balayage of discrete laws, exact dynamic-program tables, and the reduction of an
//! instance to the finite support spanned by the program's acceptance gaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::KahanSum;
use crate::simkit::DistributionModel;

const MERGE_TOL: f64 = 1e-12;
const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// Finite law on non-negative values, kept sorted with merged near-duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.len() != probs.len() || values.is_empty() {
            return Err(Error::InvalidInput("values and probs must be non-empty and of equal length".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("values must be finite and non-negative".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInput("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self::canonical(values.into_iter().zip(probs).collect()))
    }

    fn canonical(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, p) in atoms {
            if p <= 0.0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if x - last.0 <= MERGE_TOL => {
                    let total = last.1 + p;
                    last.0 = (last.0 * last.1 + x * p) / total;
                    last.1 = total;
                }
                _ => out.push((x, p)),
            }
        }
        Self { atoms: out }
    }

    pub fn from_model(model: &DistributionModel) -> Result<Self> {
        let atoms = model
            .atom_list()
            .ok_or_else(|| Error::InvalidInput("model is not discrete".into()))?;
        Ok(Self::canonical(atoms))
    }

    pub fn to_model(&self) -> Result<DistributionModel> {
        let (values, probs): (Vec<f64>, Vec<f64>) = self.atoms.iter().copied().unzip();
        let total: f64 = probs.iter().sum();
        DistributionModel::atoms(values, probs.into_iter().map(|p| p / total).collect())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &(x, p) in &self.atoms {
            acc.add(x * p);
        }
        acc.value()
    }

    pub fn max_value(&self) -> f64 {
        self.atoms.last().map_or(0.0, |a| a.0)
    }

    /// `E[(X - g)^+]`.
    pub fn excess(&self, g: f64) -> f64 {
        let mut acc = KahanSum::new();
        for &(x, p) in self.atoms.iter().rev() {
            if x <= g {
                break;
            }
            acc.add(p * (x - g));
        }
        acc.value()
    }
}

/// Moves the mass of `[a, b]` to its endpoints, preserving the mean.
pub fn balayage_op(d: &DiscreteDistribution, a: f64, b: f64) -> Result<DiscreteDistribution> {
    if !(a < b) {
        return Err(Error::InvalidInput(format!("balayage needs a < b, got [{a}, {b}]")));
    }
    if a < 0.0 || !b.is_finite() {
        return Err(Error::InvalidInput(format!("balayage interval [{a}, {b}] must be finite and non-negative")));
    }
    let width = b - a;
    let (mut to_a, mut to_b) = (KahanSum::new(), KahanSum::new());
    let mut out = Vec::with_capacity(d.atoms.len() + 2);
    for &(x, p) in &d.atoms {
        if x < a || x > b {
            out.push((x, p));
        } else {
            to_a.add(p * (b - x) / width);
            to_b.add(p * (x - a) / width);
        }
    }
    out.push((a, to_a.value()));
    out.push((b, to_b.value()));
    Ok(DiscreteDistribution::canonical(out))
}

/// Order in which a sweep visits the sorted points `x_1 < … < x_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    /// `[x_1, x_2]`, then `[x_2, x_3]`, and so on.
    Increasing,
    /// `[x_1, x_m]`, then `[x_1, x_{m-1}]`, down to `[x_1, x_2]`.
    Decreasing,
}

/// Successive balayage of `d` over `points`.
pub fn balayage_sweep(d: &DiscreteDistribution, points: &[f64], order: SweepOrder) -> Result<DiscreteDistribution> {
    let pts = dedup_points(points.to_vec());
    let mut cur = d.clone();
    if pts.len() < 2 {
        return Ok(cur);
    }
    match order {
        SweepOrder::Increasing => {
            for w in pts.windows(2) {
                cur = balayage_op(&cur, w[0], w[1])?;
            }
        }
        SweepOrder::Decreasing => {
            for r in (1..pts.len()).rev() {
                cur = balayage_op(&cur, pts[0], pts[r])?;
            }
        }
    }
    Ok(cur)
}

fn dedup_points(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for x in pts {
        match out.last() {
            Some(&last) if x - last <= MERGE_TOL => {}
            _ => out.push(x),
        }
    }
    out
}

/// Values `V_i^j` of selecting `j` among `i` items, with `V_0^j = V_i^0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdpTable {
    pub n: usize,
    pub k: usize,
    pub v: Vec<Vec<f64>>,
}

impl BdpTable {
    pub fn value(&self) -> f64 {
        self.v[self.n][self.k]
    }

    /// `Δ_i^j = V_i^j - V_i^{j-1}` for `j >= 1`.
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        self.v[i][j] - self.v[i][j - 1]
    }

    /// `V` non-decreasing in `i` and `j`, gaps non-decreasing in `i` and non-increasing in `j`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        for i in 0..=self.n {
            for j in 0..=self.k {
                if i > 0 && self.v[i][j] < self.v[i - 1][j] - tol {
                    return false;
                }
                if j > 0 && self.v[i][j] < self.v[i][j - 1] - tol {
                    return false;
                }
                if j > 0 && i > 0 && self.gap(i, j) < self.gap(i - 1, j) - tol {
                    return false;
                }
                if j > 1 && self.gap(i, j) > self.gap(i, j - 1) + tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Exact table of `V_i^j = E[(V_{i-1}^{j-1} + X) ∨ V_{i-1}^j]` by atom summation.
pub fn bdp_table(d: &DiscreteDistribution, n: usize, k: usize) -> Result<BdpTable> {
    if k == 0 || n < k {
        return Err(Error::InvalidInput(format!("need n >= k >= 1, got n = {n}, k = {k}")));
    }
    let mut v = vec![vec![0.0; k + 1]];
    for i in 1..=n {
        let prev = &v[i - 1];
        let mut row = vec![0.0; k + 1];
        for j in 1..=k {
            row[j] = prev[j] + d.excess(prev[j] - prev[j - 1]);
        }
        v.push(row);
    }
    Ok(BdpTable { n, k, v })
}

/// Closed-form bound `2 + k(k-1)/2 + k(n-k)` on the reduced support size.
pub fn support_bound(n: usize, k: usize) -> usize {
    2 + k * (k.saturating_sub(1)) / 2 + k * n.saturating_sub(k)
}

/// `{0, 1} ∪ {Δ_i^j : 1 <= i <= n-1, 1 <= j <= min(i, k)}`, deduplicated.
pub fn gap_support(table: &BdpTable) -> Vec<f64> {
    let mut pts = vec![0.0, 1.0];
    for i in 1..table.n {
        for j in 1..=table.k.min(i) {
            pts.push(table.gap(i, j));
        }
    }
    dedup_points(pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub reduced: DiscreteDistribution,
    pub points: Vec<f64>,
    pub value_before: f64,
    pub value_after: f64,
}

/// Sweeps `d` over the gap support of its own table, keeping `V_n^k` while raising the benchmark.
pub fn reduce_instance(d: &DiscreteDistribution, n: usize, k: usize) -> Result<Reduction> {
    if d.max_value() > 1.0 {
        return Err(Error::Domain(format!(
            "support must lie in [0, 1], found value {}; rescale first",
            d.max_value()
        )));
    }
    let before = bdp_table(d, n, k)?;
    let points = gap_support(&before);
    let reduced = balayage_sweep(d, &points, SweepOrder::Increasing)?;
    let after = bdp_table(&reduced, n, k)?;
    Ok(Reduction {
        reduced,
        points,
        value_before: before.value(),
        value_after: after.value(),
    })
}

/// Exact `E[Σ_{i<=l} X_(i)]` by enumerating `support^n`.
pub fn brute_force_opt(d: &DiscreteDistribution, n: usize, ell: usize) -> Result<f64> {
    if ell == 0 || ell > n {
        return Err(Error::InvalidInput(format!("need 1 <= ell <= n, got n = {n}, ell = {ell}")));
    }
    let m = d.atoms.len();
    if (m as f64).powi(n as i32) > BRUTE_FORCE_LIMIT {
        return Err(Error::InvalidInput(format!("{m}^{n} outcomes exceed the enumeration limit")));
    }
    let mut idx = vec![0usize; n];
    let mut buf = vec![0usize; n];
    let mut acc = KahanSum::new();
    loop {
        let mut prob = 1.0;
        for &i in &idx {
            prob *= d.atoms[i].1;
        }
        buf.copy_from_slice(&idx);
        buf.sort_unstable_by(|a, b| b.cmp(a));
        let top: f64 = buf[..ell].iter().map(|&i| d.atoms[i].0).sum();
        acc.add(prob * top);
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(acc.value());
            }
            idx[pos] += 1;
            if idx[pos] < m {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
