//! Regularized incomplete beta and gamma functions for integer shapes.
//!
//! Both families reduce to finite binomial or Poisson tail sums:
//! `I_x(a, b) = P(Bin(a+b-1, x) >= a)` and `γ_l(z) = P(Pois(z) >= l)`.
//! Each tail is summed from its boundary term outward on whichever side is
//! the smaller probability, so tiny values keep full relative precision.
//! Boundary terms use Loader's saddle-point form of the binomial and Poisson
//! masses, which stays accurate for counts in the millions.

use crate::error::{Error, Result};
use crate::quad::KahanSum;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const TAIL_EPS: f64 = 1e-17;

/// `ln Γ(n+1) - (n+1/2) ln n + n - ln sqrt(2π)` for integer `n >= 1`.
fn stirlerr(n: u64) -> f64 {
    if n <= 15 {
        let mut fact = 1.0f64;
        for i in 2..=n {
            fact *= i as f64;
        }
        let nf = n as f64;
        return fact.ln() - (nf + 0.5) * nf.ln() + nf - LN_SQRT_2PI;
    }
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let nf = n as f64;
    let nn = nf * nf;
    if nf > 500.0 {
        (S0 - S1 / nn) / nf
    } else if nf > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / nf
    } else if nf > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
    }
}

/// Deviance term `x ln(x/np) + np - x`, computed without cancellation near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln n!` for any integer `n`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    stirlerr(n) + (nf + 0.5) * nf.ln() - nf + LN_SQRT_2PI
}

/// Binomial mass `C(n, x) p^x q^(n-x)` with `q = 1 - p` supplied separately.
fn dbinom_raw(x: u64, n: u64, p: f64, q: f64) -> f64 {
    if x > n {
        return 0.0;
    }
    if p == 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if x == 0 {
        if n == 0 {
            return 1.0;
        }
        let lc = if p < 0.1 {
            -bd0(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
        return lc.exp();
    }
    if x == n {
        let lc = if q < 0.1 {
            -bd0(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
        return lc.exp();
    }
    let xf = x as f64;
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(xf, nf * p) - bd0(nf - xf, nf * q);
    let lf = 2.0 * LN_SQRT_2PI + xf.ln() + (-xf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Binomial probability mass `P(Bin(n, p) = x)`.
pub fn binom_pmf(x: u64, n: u64, p: f64) -> f64 {
    dbinom_raw(x, n, p, 1.0 - p)
}

/// Poisson probability mass `P(Pois(lambda) = x)`.
pub fn poisson_pmf(x: u64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if x == 0 {
        return (-lambda).exp();
    }
    let xf = x as f64;
    (-stirlerr(x) - bd0(xf, lambda)).exp() / (2.0 * std::f64::consts::PI * xf).sqrt()
}

/// Returns `(P(Bin(m,x) >= a), P(Bin(m,x) < a))`, each accurate on its own scale.
pub fn binom_tails(m: u64, a: u64, x: f64, q: f64) -> (f64, f64) {
    if a == 0 {
        return (1.0, 0.0);
    }
    if a > m || x <= 0.0 {
        return (0.0, 1.0);
    }
    if q <= 0.0 {
        return (1.0, 0.0);
    }
    let mut sum = KahanSum::new();
    if (a as f64) > (m as f64 + 1.0) * x {
        let r = x / q;
        let mut j = a;
        let mut t = dbinom_raw(j, m, x, q);
        sum.add(t);
        while j < m && t > 0.0 {
            let ratio = (m - j) as f64 / (j + 1) as f64 * r;
            t *= ratio;
            j += 1;
            sum.add(t);
            if ratio < 1.0 && t <= TAIL_EPS * (1.0 - ratio) * sum.value() {
                break;
            }
        }
        let up = sum.value().min(1.0);
        (up, 1.0 - up)
    } else {
        let r = q / x;
        let mut j = a - 1;
        let mut t = dbinom_raw(j, m, x, q);
        sum.add(t);
        while j > 0 && t > 0.0 {
            let ratio = j as f64 / (m - j + 1) as f64 * r;
            t *= ratio;
            j -= 1;
            sum.add(t);
            if ratio < 1.0 && t <= TAIL_EPS * (1.0 - ratio) * sum.value() {
                break;
            }
        }
        let lo = sum.value().min(1.0);
        (1.0 - lo, lo)
    }
}

/// Returns `(P(Pois(z) >= a), P(Pois(z) < a))`, each accurate on its own scale.
pub fn poisson_tails(a: u64, z: f64) -> (f64, f64) {
    if a == 0 {
        return (1.0, 0.0);
    }
    if z <= 0.0 {
        return (0.0, 1.0);
    }
    if z.is_infinite() {
        return (1.0, 0.0);
    }
    let mut sum = KahanSum::new();
    if (a as f64) > z {
        let mut j = a;
        let mut t = poisson_pmf(j, z);
        sum.add(t);
        while t > 0.0 {
            let ratio = z / (j + 1) as f64;
            t *= ratio;
            j += 1;
            sum.add(t);
            if t <= TAIL_EPS * (1.0 - ratio) * sum.value() {
                break;
            }
        }
        let up = sum.value().min(1.0);
        (up, 1.0 - up)
    } else {
        let mut j = a - 1;
        let mut t = poisson_pmf(j, z);
        sum.add(t);
        while j > 0 && t > 0.0 {
            let ratio = j as f64 / z;
            t *= ratio;
            j -= 1;
            sum.add(t);
            if ratio < 1.0 && t <= TAIL_EPS * (1.0 - ratio) * sum.value() {
                break;
            }
        }
        let lo = sum.value().min(1.0);
        (1.0 - lo, lo)
    }
}

/// Integer shapes `(a, b)` of a Beta law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BetaParams {
    a: u64,
    b: u64,
}

impl BetaParams {
    pub fn new(a: u64, b: u64) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::Domain(format!(
                "beta shapes must be positive, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn mean(&self) -> f64 {
        self.a as f64 / (self.a + self.b) as f64
    }

    /// `ln B(a, b)`.
    pub fn ln_beta(&self) -> f64 {
        ln_factorial(self.a - 1) + ln_factorial(self.b - 1) - ln_factorial(self.a + self.b - 1)
    }

    /// Lower CDF `β_{a,b}(x)`, with `x` clamped to `[0, 1]`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.tails(x).0
    }

    /// Upper tail `1 - β_{a,b}(x)`, accurate when it is small.
    pub fn sf(&self, x: f64) -> f64 {
        self.tails(x).1
    }

    /// Returns `(cdf, sf)` from one tail evaluation.
    pub fn tails(&self, x: f64) -> (f64, f64) {
        if x <= 0.0 {
            return (0.0, 1.0);
        }
        if x >= 1.0 {
            return (1.0, 0.0);
        }
        binom_tails(self.a + self.b - 1, self.a, x, 1.0 - x)
    }

    /// Density `x^(a-1) (1-x)^(b-1) / B(a, b)`.
    pub fn density(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let m = self.a + self.b - 1;
        m as f64 * dbinom_raw(self.a - 1, m - 1, x, 1.0 - x)
    }

    /// Quantile: `x` with `β_{a,b}(x) = y`.
    pub fn inv(&self, y: f64) -> f64 {
        self.inv_guess(y, None)
    }

    /// Quantile starting Newton from `guess` (warm start for monotone sweeps).
    pub fn inv_from(&self, y: f64, guess: f64) -> f64 {
        self.inv_guess(y, Some(guess))
    }

    /// `x` with `1 - β_{a,b}(x) = s`.
    pub fn inv_sf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        if s >= 1.0 {
            return 0.0;
        }
        if s <= 0.5 {
            self.solve(s, true, None)
        } else {
            self.solve(1.0 - s, false, None)
        }
    }

    /// [`Self::inv_sf`] starting Newton from `guess`.
    pub fn inv_sf_from(&self, s: f64, guess: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        if s >= 1.0 {
            return 0.0;
        }
        if s <= 0.5 {
            self.solve(s, true, Some(guess))
        } else {
            self.solve(1.0 - s, false, Some(guess))
        }
    }

    fn inv_guess(&self, y: f64, guess: Option<f64>) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if y >= 1.0 {
            return 1.0;
        }
        if y <= 0.5 {
            self.solve(y, false, guess)
        } else {
            self.solve(1.0 - y, true, guess)
        }
    }

    /// Newton with a maintained bracket. `upper` selects the tail the target lives on.
    fn solve(&self, target: f64, upper: bool, guess: Option<f64>) -> f64 {
        let resid = |x: f64| -> f64 {
            let (c, s) = self.tails(x);
            if upper {
                target - s
            } else {
                c - target
            }
        };
        let mut x = match guess {
            Some(g) if g > 0.0 && g < 1.0 => g,
            _ => {
                let lb = self.ln_beta();
                let g = if upper {
                    1.0 - ((target.ln() + (self.b as f64).ln() + lb) / self.b as f64).exp()
                } else {
                    ((target.ln() + (self.a as f64).ln() + lb) / self.a as f64).exp()
                };
                if g > 0.0 && g < 1.0 {
                    g
                } else {
                    self.mean()
                }
            }
        };
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for _ in 0..400 {
            let f = resid(x);
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.density(x);
            let newton = x - f / d;
            let next = if d > 0.0 && newton.is_finite() && newton > lo && newton < hi {
                newton
            } else if lo == 0.0 {
                hi * 0.1
            } else if hi == 1.0 {
                1.0 - (1.0 - lo) * 0.1
            } else if hi > 8.0 * lo {
                (lo * hi).sqrt()
            } else if (1.0 - lo) > 8.0 * (1.0 - hi) {
                1.0 - ((1.0 - lo) * (1.0 - hi)).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            let scale = x.min(1.0 - x).max(x * f64::EPSILON);
            if (next - x).abs() <= 4.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
                return next;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.max(f64::MIN_POSITIVE) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Integer shape `l` of a Gamma(l, 1) law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GammaShape {
    ell: u64,
}

impl GammaShape {
    pub fn new(ell: u64) -> Result<Self> {
        if ell == 0 {
            return Err(Error::Domain("gamma shape must be positive".into()));
        }
        Ok(Self { ell })
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    /// `γ_l(z)`.
    pub fn cdf(&self, z: f64) -> f64 {
        poisson_tails(self.ell, z.max(0.0)).0
    }

    /// `1 - γ_l(z) = e^{-z} Σ_{j<l} z^j/j!`.
    pub fn sf(&self, z: f64) -> f64 {
        poisson_tails(self.ell, z.max(0.0)).1
    }

    pub fn tails(&self, z: f64) -> (f64, f64) {
        poisson_tails(self.ell, z.max(0.0))
    }

    /// Gamma(l, 1) density `z^(l-1) e^{-z} / (l-1)!`.
    pub fn density(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 0.0;
        }
        poisson_pmf(self.ell - 1, z)
    }

    /// Quantile: `z` with `γ_l(z) = y`, `y < 1`.
    pub fn inv(&self, y: f64) -> f64 {
        self.inv_guess(y, None)
    }

    pub fn inv_from(&self, y: f64, guess: f64) -> f64 {
        self.inv_guess(y, Some(guess))
    }

    /// `z` with `1 - γ_l(z) = s`.
    pub fn inv_sf(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 0.0;
        }
        if s <= 0.0 {
            return f64::INFINITY;
        }
        if s <= 0.5 {
            self.solve(s, true, None)
        } else {
            self.solve(1.0 - s, false, None)
        }
    }

    fn inv_guess(&self, y: f64, guess: Option<f64>) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if y >= 1.0 {
            return f64::INFINITY;
        }
        if y <= 0.5 {
            self.solve(y, false, guess)
        } else {
            self.solve(1.0 - y, true, guess)
        }
    }

    fn solve(&self, target: f64, upper: bool, guess: Option<f64>) -> f64 {
        let l = self.ell as f64;
        let resid = |z: f64| -> f64 {
            let (c, s) = self.tails(z);
            if upper {
                target - s
            } else {
                c - target
            }
        };
        let mut z = match guess {
            Some(g) if g > 0.0 && g.is_finite() => g,
            _ => {
                let g = if upper {
                    let t = -target.ln();
                    t + (l - 1.0) * t.max(1.0).ln()
                } else {
                    ((target.ln() + ln_factorial(self.ell)) / l).exp()
                };
                if g > 0.0 && g.is_finite() {
                    g
                } else {
                    l
                }
            }
        };
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        for _ in 0..400 {
            let f = resid(z);
            if f == 0.0 {
                return z;
            }
            if f < 0.0 {
                lo = z;
            } else {
                hi = z;
            }
            let d = self.density(z);
            let newton = z - f / d;
            let next = if d > 0.0 && newton.is_finite() && newton > lo && newton < hi {
                newton
            } else if hi.is_infinite() {
                2.0 * z.max(1.0)
            } else if lo == 0.0 {
                hi * 0.1
            } else if hi > 8.0 * lo {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            if (next - z).abs() <= 4.0 * f64::EPSILON * z.max(f64::MIN_POSITIVE) {
                return next;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.max(f64::MIN_POSITIVE) {
                return next;
            }
            z = next;
        }
        z
    }
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{what} = {x} outside [0, 1]")));
    }
    Ok(())
}

/// `β_{a,b}(x)`.
pub fn reg_inc_beta(p: BetaParams, x: f64) -> Result<f64> {
    check_unit(x, "x")?;
    Ok(p.cdf(x))
}

/// Inverse of [`reg_inc_beta`].
pub fn reg_inc_beta_inv(p: BetaParams, y: f64) -> Result<f64> {
    check_unit(y, "y")?;
    Ok(p.inv(y))
}

/// `γ_l(z)`.
pub fn reg_inc_gamma(s: GammaShape, z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::Domain(format!("z = {z} must be non-negative")));
    }
    Ok(s.cdf(z))
}

/// Inverse of [`reg_inc_gamma`]; `y` must lie in `[0, 1)`.
pub fn reg_inc_gamma_inv(s: GammaShape, y: f64) -> Result<f64> {
    if y.is_nan() || !(0.0..1.0).contains(&y) {
        return Err(Error::Domain(format!("y = {y} outside [0, 1)")));
    }
    Ok(s.inv(y))
}
