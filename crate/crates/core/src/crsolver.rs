//! Integral equations for the asymptotic single-selection competitive ratios.
//!
//! The depth-`l` constant `c_l` solves
//! `(1/Γ(l)) ∫_0^∞ ν^{l-1} / (e^ν (c - l) + l Σ_{i≤l} ν^i/i!) dν = 1`
//! and the ratio is `l / c_l`. The decreasing-mixture benchmark generalizes the
//! numerator and denominator to weighted sums over depths.
//!
//! Roots are found on the excess `d = c - c_min` in log space, because for
//! moderate `l` the excess is many orders of magnitude below `c` itself.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson_panels;
use crate::specfun::GammaShape;

/// Solution of the depth-`l` equation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CrResult {
    pub ell: u32,
    pub c_ell: f64,
    pub cr: f64,
    /// `1 - cr`, computed without cancellation.
    pub one_minus_cr: f64,
    pub residual: f64,
}

/// Solution of the mixture equation: `cr = 1 / (p_1 c)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MixtureResult {
    pub p: Vec<f64>,
    pub c: f64,
    pub cr: f64,
    pub one_minus_cr: f64,
    pub residual: f64,
}

/// Non-increasing probability vector `p_1 >= ... >= p_l > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureWeights {
    p: Vec<f64>,
}

impl MixtureWeights {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidInput("mixture weights are empty".into()));
        }
        if p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput("mixture weights must be positive".into()));
        }
        if p.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput("mixture weights must be non-increasing".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("mixture weights sum to {sum}, not 1")));
        }
        Ok(Self { p })
    }

    /// Uniform weights over the top `l` order statistics.
    pub fn uniform(ell: usize) -> Result<Self> {
        if ell == 0 {
            return Err(Error::InvalidInput("depth must be positive".into()));
        }
        Self::new(vec![1.0 / ell as f64; ell])
    }

    /// `(1 - alpha, alpha)` for `alpha` in `[0, 1/2]`; zero mass is dropped.
    pub fn two_point(alpha: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&alpha) {
            return Err(Error::InvalidInput(format!("alpha = {alpha} outside [0, 1/2]")));
        }
        if alpha == 0.0 {
            Self::new(vec![1.0])
        } else {
            Self::new(vec![1.0 - alpha, alpha])
        }
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// `(s, (p_s - p_{s+1}) / p_1)` for the non-zero mixture components.
    fn components(&self) -> Vec<(u64, f64)> {
        let p1 = self.p[0];
        (0..self.p.len())
            .filter_map(|i| {
                let next = self.p.get(i + 1).copied().unwrap_or(0.0);
                let w = (self.p[i] - next) / p1;
                (w > 0.0).then_some((i as u64 + 1, w))
            })
            .collect()
    }
}

/// The integrand `N(ν) / (e^ν d + D(ν))` shared by both equations.
struct Kernel {
    comps: Vec<(u64, f64)>,
}

impl Kernel {
    fn numerator(&self, nu: f64) -> f64 {
        // Σ w_s ν^{s-1}/(s-1)!
        let mut acc = 0.0;
        for &(s, w) in &self.comps {
            acc += w * poly_term(nu, s - 1);
        }
        acc
    }

    fn denominator_poly(&self, nu: f64) -> f64 {
        // Σ w_s s Σ_{i≤s} ν^i/i!
        let mut acc = 0.0;
        for &(s, w) in &self.comps {
            let mut t = 1.0;
            let mut part = 1.0;
            for i in 1..=s {
                t *= nu / i as f64;
                part += t;
            }
            acc += w * s as f64 * part;
        }
        acc
    }

    /// `N(ν) e^{-ν} / (d + e^{-ν} D(ν))`, overflow-free for large ν.
    fn eval(&self, nu: f64, d: f64) -> f64 {
        if nu < 30.0 {
            self.numerator(nu) / (nu.exp() * d + self.denominator_poly(nu))
        } else {
            let e = (-nu).exp();
            self.numerator(nu) * e / (d + e * self.denominator_poly(nu))
        }
    }

    /// `Σ w_s (1 - γ_s(ν))`: mass of the numerator beyond ν.
    fn numerator_tail(&self, nu: f64) -> f64 {
        self.comps
            .iter()
            .map(|&(s, w)| w * GammaShape::new(s).expect("s >= 1").sf(nu))
            .sum()
    }

    fn max_depth(&self) -> u64 {
        self.comps.iter().map(|c| c.0).max().unwrap_or(1)
    }

    /// `∫_0^∞` of the kernel at excess `d`.
    fn integral(&self, d: f64, tol: f64) -> f64 {
        let mut nu_star = self.max_depth() as f64 + 40.0;
        while self.numerator_tail(nu_star) / d > 1e-3 * tol && nu_star < 700.0 {
            nu_star += 10.0;
        }
        let mut pts = Vec::new();
        let mut x = 0.0;
        while x < nu_star {
            pts.push(x);
            x += 5.0;
        }
        pts.push(nu_star);
        let body = adaptive_simpson_panels(|nu| self.eval(nu, d), &pts, tol);
        body + self.numerator_tail(nu_star) / d
    }
}

fn poly_term(nu: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut t = 1.0;
    for i in 1..=k {
        t *= nu / i as f64;
    }
    t
}

fn depth_kernel(ell: u32) -> Kernel {
    Kernel {
        comps: vec![(ell as u64, 1.0)],
    }
}

const QUAD_TOL: f64 = 1e-13;
/// Beyond this depth `1 - CR_l` underflows double precision.
pub const MAX_DEPTH: u32 = 200;

/// `I(c)` for depth `l`, in the form with `e^ν` in the denominator.
pub fn ratio_integral(ell: u32, c: f64) -> f64 {
    depth_kernel(ell).integral(c - ell as f64, QUAD_TOL)
}

/// `I(c)` in the form `(1/Γ(l)) ∫ ν^{l-1} e^{-ν} / (c - l γ_{l+1}(ν)) dν`, evaluated
/// through the incomplete gamma function rather than the explicit polynomial.
pub fn ratio_integral_gamma_form(ell: u32, c: f64) -> f64 {
    let l = ell as u64;
    let g = GammaShape::new(l).expect("ell >= 1");
    let g1 = GammaShape::new(l + 1).expect("ell >= 1");
    let d = c - ell as f64;
    let integrand = |nu: f64| g.density(nu) / (d + ell as f64 * g1.sf(nu));
    let mut nu_star = ell as f64 + 40.0;
    while g.sf(nu_star) / d > 1e-16 && nu_star < 700.0 {
        nu_star += 10.0;
    }
    let mut pts = Vec::new();
    let mut x = 0.0;
    while x < nu_star {
        pts.push(x);
        x += 5.0;
    }
    pts.push(nu_star);
    adaptive_simpson_panels(integrand, &pts, QUAD_TOL / 10.0) + g.sf(nu_star) / d
}

/// Left side of the equation written in the ratio itself:
/// `(1/l!) ∫ ν^{l-1} / (e^ν (1/cr - 1) + Σ_{i≤l} ν^i/i!) dν`.
pub fn cr_equation_integral(ell: u32, cr: f64) -> f64 {
    let k = depth_kernel(ell);
    let u = 1.0 / cr - 1.0;
    let l = ell as u64;
    let f = |nu: f64| {
        let num = poly_term(nu, l - 1);
        let den = k.denominator_poly(nu) / ell as f64;
        if nu < 30.0 {
            num / (nu.exp() * u + den)
        } else {
            let e = (-nu).exp();
            num * e / (u + e * den)
        }
    };
    let mut nu_star = ell as f64 + 40.0;
    while k.numerator_tail(nu_star) / u > 1e-16 && nu_star < 700.0 {
        nu_star += 10.0;
    }
    let mut pts = Vec::new();
    let mut x = 0.0;
    while x < nu_star {
        pts.push(x);
        x += 5.0;
    }
    pts.push(nu_star);
    let body = adaptive_simpson_panels(f, &pts, QUAD_TOL / 10.0);
    (body + k.numerator_tail(nu_star) / u) / ell as f64
}

/// Mixture equation value at `c`.
pub fn mixture_integral(w: &MixtureWeights, c: f64) -> f64 {
    let k = Kernel {
        comps: w.components(),
    };
    k.integral(c - 1.0 / w.p[0], QUAD_TOL)
}

/// Bisection in `ln d` for `I(d) = 1`, with `I` decreasing in `d`.
///
/// Each midpoint is first judged with a coarse quadrature; the fine one is only
/// needed when the coarse value is too close to 1 to decide the side.
fn solve_excess(k: &Kernel, mut d_hi: f64, tol: f64) -> Result<(f64, f64)> {
    let qtol = (tol / 10.0).clamp(1e-15, QUAD_TOL);
    let above_one = |d: f64| -> bool {
        let coarse = k.integral(d, 1e-7);
        if (coarse - 1.0).abs() > 1e-5 {
            coarse > 1.0
        } else {
            k.integral(d, qtol) > 1.0
        }
    };
    let mut guard = 0;
    while above_one(d_hi) {
        d_hi *= 4.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Bracket("upper excess never brings the integral below 1".into()));
        }
    }
    let mut d_lo = d_hi * 1e-12;
    guard = 0;
    while !above_one(d_lo) {
        d_lo *= 1e-6;
        guard += 1;
        if guard > 40 || d_lo < 1e-290 {
            return Err(Error::Bracket("lower excess never brings the integral above 1".into()));
        }
    }
    let (mut lo, mut hi) = (d_lo.ln(), d_hi.ln());
    for _ in 0..200 {
        if hi - lo <= 1e-14 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if above_one(mid.exp()) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = (0.5 * (lo + hi)).exp();
    let residual = (k.integral(d, qtol) - 1.0).abs();
    if residual > tol.max(1e-11) {
        return Err(Error::NonConvergence(format!(
            "integral residual {residual:e} above tolerance {tol:e}"
        )));
    }
    Ok((d, residual))
}

/// Solves for `c_l` and `CR_l = l / c_l`.
pub fn solve_cr_ell(ell: u32, tol: f64) -> Result<CrResult> {
    if ell == 0 || ell > MAX_DEPTH {
        return Err(Error::InvalidInput(format!("ell must lie in 1..={MAX_DEPTH}, got {ell}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let l = ell as f64;
    // Upper end c = l / (1 - e^{-l}) of the bracket.
    let d_hi = l / l.exp_m1();
    let k = depth_kernel(ell);
    if k.integral(d_hi, QUAD_TOL) > 1.0 {
        return Err(Error::Bracket(format!("I(c) > 1 at the upper bracket end for ell = {ell}")));
    }
    let (d, residual) = solve_excess(&k, d_hi, tol)?;
    let c = l + d;
    Ok(CrResult {
        ell,
        c_ell: c,
        cr: l / c,
        one_minus_cr: d / c,
        residual,
    })
}

/// `1 - e^{-l}`.
pub fn exp_lower_bound(ell: u32) -> f64 {
    -(-(ell as f64)).exp_m1()
}

/// Solves the decreasing-mixture equation; `cr = 1 / (p_1 c)`.
pub fn solve_cr_mixture(w: &MixtureWeights, tol: f64) -> Result<MixtureResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let k = Kernel {
        comps: w.components(),
    };
    let p1 = w.p[0];
    let (d, residual) = solve_excess(&k, 1.0 / p1, tol)?;
    let c = 1.0 / p1 + d;
    Ok(MixtureResult {
        p: w.p.clone(),
        c,
        cr: 1.0 / (p1 * c),
        one_minus_cr: p1 * d / (1.0 + p1 * d),
        residual,
    })
}

/// Worst case of the prophet's own `k`-selection against the top-`l` average.
pub fn prophet_worst(k: u32, ell: u32) -> f64 {
    (ell as f64 / k as f64).max(1.0)
}

/// `(c, I(c))` on an even grid of the bracket `(l, l / (1 - e^{-l})]`.
pub fn integral_on_bracket(ell: u32, points: usize) -> Vec<(f64, f64)> {
    let l = ell as f64;
    let hi = l / l.exp_m1();
    let k = depth_kernel(ell);
    (1..=points)
        .map(|i| {
            let d = hi * i as f64 / points as f64;
            (l + d, k.integral(d, QUAD_TOL))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_one_matches_known_digits() {
        let r = solve_cr_ell(1, 1e-12).unwrap();
        assert!((r.cr - 0.745).abs() < 5e-4);
        assert!((r.cr - r.ell as f64 / r.c_ell).abs() < 1e-15);
    }

    #[test]
    fn prophet_worst_values() {
        assert_eq!(prophet_worst(2, 1), 1.0);
        assert_eq!(prophet_worst(1, 3), 3.0);
        assert_eq!(prophet_worst(4, 4), 1.0);
    }

    #[test]
    fn exp_bound_closed_form() {
        assert!((exp_lower_bound(1) - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!((exp_lower_bound(2) - 0.864_664_716_763_387_3).abs() < 1e-15);
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(MixtureWeights::new(vec![0.25, 0.75]).is_err());
        assert!(MixtureWeights::new(vec![0.5, 0.4]).is_err());
        assert!(MixtureWeights::new(vec![]).is_err());
        assert!(MixtureWeights::two_point(0.7).is_err());
    }
}
