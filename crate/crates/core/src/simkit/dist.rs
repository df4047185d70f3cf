//! Value distributions, built from a serializable description.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::worstcase::WorstCaseFq;
use crate::error::{Error, Result};
use crate::quad::adaptive_simpson_panels;

/// JSON-facing description of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    /// `lo` with probability `1 - p_hi`, `hi` with probability `p_hi`.
    TwoPoint { lo: f64, hi: f64, p_hi: f64 },
    Atoms { values: Vec<f64>, probs: Vec<f64> },
    /// CDF `F_base^exponent`.
    Power { base: Box<ModelSpec>, exponent: f64 },
    WorstcaseFq { ell: usize, q: f64 },
}

#[derive(Debug, Clone)]
enum Repr {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Ascending values with `upper[i] = P(X > values[i])` and point masses.
    Discrete { values: Vec<f64>, upper: Vec<f64>, mass: Vec<f64> },
    Power { base: Box<DistributionModel>, exponent: f64 },
    Worst { fq: Arc<WorstCaseFq>, exponent: f64 },
}

/// A non-negative value distribution with exact CDF, quantile and tail functionals.
#[derive(Debug, Clone)]
pub struct DistributionModel {
    spec: ModelSpec,
    repr: Repr,
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidInput(format!("{what} must be finite")))
    }
}

fn discrete_from(mut pairs: Vec<(f64, f64)>) -> Result<Repr> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("atoms must not be empty".into()));
    }
    for &(v, p) in &pairs {
        finite(v, "atom value")?;
        finite(p, "atom probability")?;
        if v < 0.0 {
            return Err(Error::InvalidInput("atom values must be non-negative".into()));
        }
        if p < 0.0 {
            return Err(Error::InvalidInput("atom probabilities must be non-negative".into()));
        }
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("atom probabilities sum to {total}, not 1")));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values: Vec<f64> = Vec::new();
    let mut mass: Vec<f64> = Vec::new();
    for (v, p) in pairs {
        if p == 0.0 {
            continue;
        }
        match values.last() {
            Some(&last) if last == v => *mass.last_mut().expect("paired") += p / total,
            _ => {
                values.push(v);
                mass.push(p / total);
            }
        }
    }
    let mut upper = vec![0.0; values.len()];
    let mut acc = 0.0;
    for i in (0..values.len()).rev() {
        upper[i] = acc;
        acc += mass[i];
    }
    Ok(Repr::Discrete { values, upper, mass })
}

impl DistributionModel {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let repr = match spec {
            ModelSpec::Exponential { rate } => {
                if !(finite(*rate, "rate")? > 0.0) {
                    return Err(Error::InvalidInput("rate must be positive".into()));
                }
                Repr::Exponential { rate: *rate }
            }
            ModelSpec::Uniform { lo, hi } => {
                finite(*lo, "lo")?;
                finite(*hi, "hi")?;
                if !(*lo >= 0.0 && hi > lo) {
                    return Err(Error::InvalidInput("uniform needs 0 <= lo < hi".into()));
                }
                Repr::Uniform { lo: *lo, hi: *hi }
            }
            ModelSpec::TwoPoint { lo, hi, p_hi } => {
                finite(*lo, "lo")?;
                finite(*hi, "hi")?;
                if !(*lo >= 0.0 && hi > lo) {
                    return Err(Error::InvalidInput("two_point needs 0 <= lo < hi".into()));
                }
                if !(*p_hi >= 0.0 && *p_hi <= 1.0) {
                    return Err(Error::InvalidInput("p_hi must lie in [0, 1]".into()));
                }
                discrete_from(vec![(*lo, 1.0 - p_hi), (*hi, *p_hi)])?
            }
            ModelSpec::Atoms { values, probs } => {
                if values.len() != probs.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "{} values but {} probabilities",
                        values.len(),
                        probs.len()
                    )));
                }
                discrete_from(values.iter().copied().zip(probs.iter().copied()).collect())?
            }
            ModelSpec::Power { base, exponent } => {
                if !(finite(*exponent, "exponent")? > 0.0) {
                    return Err(Error::InvalidInput("exponent must be positive".into()));
                }
                let base = DistributionModel::from_spec(base)?;
                base.powered(*exponent)
            }
            ModelSpec::WorstcaseFq { ell, q } => Repr::Worst {
                fq: Arc::new(WorstCaseFq::new(*ell, *q)?),
                exponent: 1.0,
            },
        };
        Ok(Self { spec: spec.clone(), repr })
    }

    fn powered(&self, e: f64) -> Repr {
        match &self.repr {
            Repr::Discrete { values, upper, .. } => {
                let up: Vec<f64> = upper.iter().map(|&u| -(e * (-u).ln_1p()).exp_m1()).collect();
                let mut mass = Vec::with_capacity(values.len());
                let mut prev = 1.0;
                for &u in &up {
                    mass.push(prev - u);
                    prev = u;
                }
                Repr::Discrete {
                    values: values.clone(),
                    upper: up,
                    mass,
                }
            }
            Repr::Power { base, exponent } => Repr::Power {
                base: base.clone(),
                exponent: exponent * e,
            },
            Repr::Worst { fq, exponent } => Repr::Worst {
                fq: fq.clone(),
                exponent: exponent * e,
            },
            _ => Repr::Power {
                base: Box::new(self.clone()),
                exponent: e,
            },
        }
    }

    /// Parses a JSON description.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("distribution JSON: {e}")))?;
        Self::from_spec(&spec)
    }

    /// Parses raw bytes as a JSON description.
    pub fn parse(data: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(data)
            .map_err(|e| Error::InvalidInput(format!("distribution JSON is not UTF-8: {e}")))?;
        Self::from_json(text)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::from_spec(&ModelSpec::Exponential { rate })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::from_spec(&ModelSpec::Uniform { lo, hi })
    }

    pub fn atoms(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        Self::from_spec(&ModelSpec::Atoms { values, probs })
    }

    pub fn two_point(lo: f64, hi: f64, p_hi: f64) -> Result<Self> {
        Self::from_spec(&ModelSpec::TwoPoint { lo, hi, p_hi })
    }

    /// `F_base^exponent`.
    pub fn power(base: &DistributionModel, exponent: f64) -> Result<Self> {
        Self::from_spec(&ModelSpec::Power {
            base: Box::new(base.spec.clone()),
            exponent,
        })
    }

    pub fn worstcase_fq(ell: usize, q: f64) -> Result<Self> {
        Self::from_spec(&ModelSpec::WorstcaseFq { ell, q })
    }

    /// The construction data when this is a power of `F_q`.
    pub fn worstcase(&self) -> Option<(&WorstCaseFq, f64)> {
        match &self.repr {
            Repr::Worst { fq, exponent } => Some((fq, *exponent)),
            _ => None,
        }
    }

    /// `(value, probability)` pairs for purely discrete models.
    pub fn atom_list(&self) -> Option<Vec<(f64, f64)>> {
        match &self.repr {
            Repr::Discrete { values, mass, .. } => {
                Some(values.iter().copied().zip(mass.iter().copied()).collect())
            }
            _ => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.repr, Repr::Discrete { .. })
    }

    /// `P(X > x)`.
    pub fn sf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Repr::Uniform { lo, hi } => ((hi - x) / (hi - lo)).clamp(0.0, 1.0),
            Repr::Discrete { values, upper, .. } => {
                let i = values.partition_point(|&v| v <= x);
                if i == 0 {
                    1.0
                } else {
                    upper[i - 1]
                }
            }
            Repr::Power { base, exponent } => {
                let s = base.sf(x);
                -(exponent * (-s).ln_1p()).exp_m1()
            }
            Repr::Worst { fq, exponent } => fq.sf(x, *exponent),
        }
    }

    /// `P(X >= x)`.
    pub fn sf_incl(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Discrete { values, upper, .. } => {
                let i = values.partition_point(|&v| v < x);
                if i == 0 {
                    1.0
                } else {
                    upper[i - 1]
                }
            }
            Repr::Power { base, exponent } => {
                let s = base.sf_incl(x);
                -(exponent * (-s).ln_1p()).exp_m1()
            }
            Repr::Worst { fq, exponent } => fq.sf_incl(x, *exponent),
            _ => self.sf(x),
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Repr::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Repr::Power { base, exponent } => base.cdf(x).powf(*exponent),
            _ => 1.0 - self.sf(x),
        }
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        1.0 - self.sf_incl(x)
    }

    /// `P(X = x)`.
    pub fn mass_at(&self, x: f64) -> f64 {
        (self.sf_incl(x) - self.sf(x)).max(0.0)
    }

    /// Generalized inverse `inf{x : F(x) >= u}`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.repr {
            Repr::Exponential { rate } => -(-u).ln_1p() / rate,
            Repr::Uniform { lo, hi } => lo + u * (hi - lo),
            Repr::Power { base, exponent } => base.quantile(u.powf(1.0 / exponent)),
            _ => self.quantile_upper(1.0 - u),
        }
    }

    /// `F⁻¹(1 - v)`, accurate for small upper-tail mass `v`.
    pub fn quantile_upper(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        match &self.repr {
            Repr::Exponential { rate } => {
                if v >= 1.0 {
                    0.0
                } else {
                    -v.ln() / rate
                }
            }
            Repr::Uniform { lo, hi } => hi - v * (hi - lo),
            Repr::Discrete { values, upper, .. } => {
                // absorb the rounding of `1 - (1 - v)` so that atoms are hit exactly
                let i = upper.partition_point(|&u| u > v + 4.0 * f64::EPSILON);
                values[i.min(values.len() - 1)]
            }
            Repr::Power { base, exponent } => {
                let vb = -((-v).ln_1p() / exponent).exp_m1();
                base.quantile_upper(vb)
            }
            Repr::Worst { fq, exponent } => fq.quantile_upper(v, *exponent),
        }
    }

    /// Draw by inversion of an upper-tail uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile_upper(1.0 - rng.gen::<f64>())
    }

    /// `E[(X - t)^+]`.
    pub fn expected_excess(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Exponential { rate } => {
                if t <= 0.0 {
                    1.0 / rate - t
                } else {
                    (-rate * t).exp() / rate
                }
            }
            Repr::Uniform { lo, hi } => {
                if t <= *lo {
                    0.5 * (lo + hi) - t
                } else if t >= *hi {
                    0.0
                } else {
                    (hi - t) * (hi - t) / (2.0 * (hi - lo))
                }
            }
            Repr::Discrete { values, mass, .. } => {
                let i = values.partition_point(|&v| v <= t);
                let mut s = 0.0;
                for j in (i..values.len()).rev() {
                    s += mass[j] * (values[j] - t);
                }
                s
            }
            Repr::Power { .. } => {
                if t < 0.0 {
                    return self.upper_tail_integral(0.0) - t;
                }
                self.upper_tail_integral(t)
            }
            Repr::Worst { fq, exponent } => fq.expected_excess(t, *exponent),
        }
    }

    /// `∫_0^{P(X>t)} (F⁻¹(1-v) - t) dv`, integrated in `s = -ln(v / P(X>t))`.
    fn upper_tail_integral(&self, t: f64) -> f64 {
        let top = self.sf(t);
        if top <= 0.0 {
            return 0.0;
        }
        let f = |s: f64| {
            let v = top * (-s).exp();
            (self.quantile_upper(v) - t).max(0.0) * v
        };
        let pts = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
        let scale = top * (1.0 + t.abs() + self.quantile_upper(0.5 * top).abs());
        adaptive_simpson_panels(f, &pts, 1e-13 * scale)
    }

    pub fn mean(&self) -> f64 {
        self.expected_excess(0.0)
    }
}

/// `√F`, the distribution of the larger of two halves of an item.
pub fn doubling_transform(dist: &DistributionModel) -> Result<DistributionModel> {
    DistributionModel::power(dist, 0.5)
}
