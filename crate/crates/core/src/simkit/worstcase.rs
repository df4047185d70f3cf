//! The hard instance built from the single-selection ODE.
//!
//! With `b(t) = γ_l(ν(t))` the solution of `b' = c_l - l γ_{l+1}(γ_l⁻¹(b))`, every
//! quantity of the construction is an integral in `ν`:
//! `t(ν) = ∫_0^ν γ_l'(s) / (c_l - l γ_{l+1}(s)) ds`,
//! `r(ν) = ∫_ν^∞ γ_l'(s) / (c_l - l γ_{l+1}(s))² ds`,
//! and `F_q(r(ν)) = e^{-ν}` below the atom at `H`.

use crate::crsolver::solve_cr_ell;
use crate::error::{Error, Result};
use crate::quad::{GaussLegendre, KahanSum};
use crate::specfun::{binom_tails, GammaShape};

const CELL: f64 = 0.25;
const GL_ORDER: usize = 20;
const NU_SPAN: f64 = 60.0;

/// Distribution of the maximum, `F_q`, together with its construction data.
#[derive(Debug, Clone)]
pub struct WorstCaseFq {
    ell: usize,
    q: f64,
    c: f64,
    nu_q: f64,
    r_q: f64,
    h: f64,
    gl: GaussLegendre,
    shape: GammaShape,
    shape_next: GammaShape,
    nu_max: f64,
    /// `t` at the nodes `m * CELL`.
    t_nodes: Vec<f64>,
    /// `r` at the nodes `m * CELL`.
    r_nodes: Vec<f64>,
}

impl WorstCaseFq {
    pub fn new(ell: usize, q: f64) -> Result<Self> {
        if ell == 0 || ell > 30 {
            return Err(Error::InvalidInput(format!("ell must be in 1..=30, got {ell}")));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidInput(format!("q must lie in (0, 1), got {q}")));
        }
        let c = solve_cr_ell(ell as u32, 1e-12)?.c_ell;
        let shape = GammaShape::new(ell as u64)?;
        let shape_next = GammaShape::new(ell as u64 + 1)?;
        let nu_max = ell as f64 + NU_SPAN;
        let cells = (nu_max / CELL).ceil() as usize;
        let nu_max = cells as f64 * CELL;
        let mut me = Self {
            ell,
            q,
            c,
            nu_q: 0.0,
            r_q: 0.0,
            h: 0.0,
            gl: GaussLegendre::new(GL_ORDER),
            shape,
            shape_next,
            nu_max,
            t_nodes: Vec::new(),
            r_nodes: Vec::new(),
        };
        let mut t_nodes = Vec::with_capacity(cells + 1);
        let mut acc = KahanSum::new();
        t_nodes.push(0.0);
        for m in 0..cells {
            let a = m as f64 * CELL;
            acc.add(me.gl.integrate(|s| me.w_t(s), a, a + CELL));
            t_nodes.push(acc.value());
        }
        let mut r_nodes = vec![0.0; cells + 1];
        let mut acc = KahanSum::new();
        acc.add(me.r_tail(nu_max));
        r_nodes[cells] = acc.value();
        for m in (0..cells).rev() {
            let a = m as f64 * CELL;
            acc.add(me.gl.integrate(|s| me.w_r(s), a, a + CELL));
            r_nodes[m] = acc.value();
        }
        me.t_nodes = t_nodes;
        me.r_nodes = r_nodes;
        me.nu_q = me.nu_of_t(q);
        if !(me.nu_q > 0.0) {
            return Err(Error::NonConvergence(format!(
                "q = {q} is too small to resolve the atom location"
            )));
        }
        me.r_q = me.r(me.nu_q);
        let slope = c - ell as f64 * me.shape_next.cdf(me.nu_q);
        me.h = me.r_q + 1.0 / (slope * me.nu_q);
        if !(me.h.is_finite() && me.h > me.r_q) {
            return Err(Error::NonConvergence(format!(
                "atom location H = {} is not above r(q) = {}",
                me.h, me.r_q
            )));
        }
        Ok(me)
    }

    fn denom(&self, s: f64) -> f64 {
        self.c - self.ell as f64 * self.shape_next.cdf(s)
    }

    fn w_t(&self, s: f64) -> f64 {
        self.shape.density(s) / self.denom(s)
    }

    /// `|r'(ν)|`.
    fn w_r(&self, s: f64) -> f64 {
        let d = self.denom(s);
        self.shape.density(s) / (d * d)
    }

    fn r_tail(&self, nu: f64) -> f64 {
        let d = self.c - self.ell as f64;
        self.shape.sf(nu) / (d * d)
    }

    fn cell_of(&self, nu: f64) -> usize {
        ((nu / CELL) as usize).min(self.t_nodes.len() - 2)
    }

    /// `t(ν)`; the limit `t(∞)` equals 1 by the defining equation of `c_l`.
    pub fn t(&self, nu: f64) -> f64 {
        if nu <= 0.0 {
            return 0.0;
        }
        if nu >= self.nu_max {
            let d = self.c - self.ell as f64;
            let last = self.t_nodes[self.t_nodes.len() - 1];
            return last + (self.shape.sf(self.nu_max) - self.shape.sf(nu)) / d;
        }
        let m = self.cell_of(nu);
        let a = m as f64 * CELL;
        self.t_nodes[m] + self.gl.integrate(|s| self.w_t(s), a, nu)
    }

    /// `r(ν)`, decreasing from `r(0)` to 0.
    pub fn r(&self, nu: f64) -> f64 {
        if nu >= self.nu_max {
            return self.r_tail(nu);
        }
        let nu = nu.max(0.0);
        let m = self.cell_of(nu);
        let b = (m + 1) as f64 * CELL;
        self.r_nodes[m + 1] + self.gl.integrate(|s| self.w_r(s), nu, b)
    }

    /// Solves `t(ν) = x` for `x` in `(0, t(ν_max))`.
    pub fn nu_of_t(&self, x: f64) -> f64 {
        let nodes = &self.t_nodes;
        let m = nodes.partition_point(|&v| v <= x);
        if m == 0 {
            return 0.0;
        }
        if m >= nodes.len() {
            return self.nu_max;
        }
        let (lo, hi) = ((m - 1) as f64 * CELL, m as f64 * CELL);
        self.newton_in_cell(|nu| self.t(nu) - x, |nu| self.w_t(nu), lo, hi)
    }

    /// Solves `r(ν) = x` for `x > 0`.
    pub fn nu_of_r(&self, x: f64) -> f64 {
        if x >= self.r_nodes[0] {
            return 0.0;
        }
        let last = self.r_nodes.len() - 1;
        if x <= self.r_nodes[last] {
            if x <= 0.0 {
                return f64::INFINITY;
            }
            let d = self.c - self.ell as f64;
            return self.shape.inv_sf(x * d * d);
        }
        let m = self.r_nodes.partition_point(|&v| v > x);
        let (lo, hi) = ((m - 1) as f64 * CELL, m as f64 * CELL);
        self.newton_in_cell(|nu| self.r(nu) - x, |nu| -self.w_r(nu), lo, hi)
    }

    fn newton_in_cell<F: Fn(f64) -> f64, D: Fn(f64) -> f64>(&self, f: F, df: D, mut lo: f64, mut hi: f64) -> f64 {
        let increasing = f(hi) > f(lo);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let fx = f(x);
            if fx == 0.0 {
                return x;
            }
            if (fx < 0.0) == increasing {
                lo = x;
            } else {
                hi = x;
            }
            let d = df(x);
            let mut next = x - fx / d;
            if !(d != 0.0 && next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * hi {
                return next;
            }
            x = next;
        }
        x
    }

    /// `∫_a^b f` over the node cells, with `b` capped at `ν_max`.
    fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let b = b.min(self.nu_max);
        if !(b > a) {
            return 0.0;
        }
        let mut acc = KahanSum::new();
        let mut lo = a;
        while lo < b {
            let hi = (((lo / CELL).floor() + 1.0) * CELL).min(b);
            acc.add(self.gl.integrate(&f, lo, hi));
            lo = hi;
        }
        acc.value()
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn c_ell(&self) -> f64 {
        self.c
    }

    /// `γ_l⁻¹(1 - y(q))`.
    pub fn nu_q(&self) -> f64 {
        self.nu_q
    }

    /// `p = F_q(H⁻)`.
    pub fn p(&self) -> f64 {
        (-self.nu_q).exp()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn r_q(&self) -> f64 {
        self.r_q
    }

    /// `P(X > x)` for `X ~ F_q^e`.
    pub fn sf(&self, x: f64, e: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        if x >= self.h {
            return 0.0;
        }
        if x >= self.r_q {
            return -(-e * self.nu_q).exp_m1();
        }
        if x <= 0.0 {
            return 1.0;
        }
        -(-e * self.nu_of_r(x)).exp_m1()
    }

    /// `P(X >= x)` for `X ~ F_q^e`.
    pub fn sf_incl(&self, x: f64, e: f64) -> f64 {
        if x > self.h {
            return 0.0;
        }
        if x == self.h {
            return -(-e * self.nu_q).exp_m1();
        }
        self.sf(x, e)
    }

    /// `F_q^e` quantile at `1 - v`.
    pub fn quantile_upper(&self, v: f64, e: f64) -> f64 {
        // at `1 - v = p` exactly the generalized inverse is the bottom of the gap, `r(q)`
        if v < -(-e * self.nu_q).exp_m1() - 4.0 * f64::EPSILON {
            return self.h;
        }
        if v >= 1.0 {
            return 0.0;
        }
        let nu = -(-v).ln_1p() / e;
        self.r(nu)
    }

    /// `E[(X - t)^+]` for `X ~ F_q^e`.
    pub fn expected_excess(&self, t: f64, e: f64) -> f64 {
        if t >= self.h {
            return 0.0;
        }
        if t < 0.0 {
            return self.expected_excess(0.0, e) - t;
        }
        let atom = -(-e * self.nu_q).exp_m1();
        let flat = (self.h - t.max(self.r_q)) * atom;
        if t >= self.r_q {
            return flat;
        }
        let top = if t <= 0.0 { f64::INFINITY } else { self.nu_of_r(t) };
        let smooth = self.integrate(|s| -(-e * s).exp_m1() * self.w_r(s), self.nu_q, top);
        let tail = if top > self.nu_max {
            (self.r(self.nu_max) - self.r(top)) * -(-e * top.min(1e300)).exp_m1()
        } else {
            0.0
        };
        smooth + tail + flat
    }

    pub fn mean(&self, e: f64) -> f64 {
        self.expected_excess(0.0, e)
    }

    /// `E[Σ_{i≤l} X_(i)]` of `n` draws from `F_q^e`.
    pub fn opt_topl(&self, n: usize, ell: usize, e: f64) -> f64 {
        let n = n as u64;
        let ell = ell as u64;
        let capped = |s: f64, keep: f64| -> f64 {
            (1..=ell).map(|i| binom_tails(n, i, s, keep).0).sum()
        };
        let smooth = self.integrate(
            |s| {
                let keep = (-e * s).exp();
                capped(-(-e * s).exp_m1(), keep) * self.w_r(s)
            },
            self.nu_q,
            self.nu_max,
        );
        let tail = ell as f64 * self.r(self.nu_max);
        let keep = (-e * self.nu_q).exp();
        let flat = (self.h - self.r_q) * capped(-(-e * self.nu_q).exp_m1(), keep);
        smooth + tail + flat
    }

    /// Samples `(t, y(t), r(t))` on a uniform mesh of `[0, 1]`.
    pub fn trajectory(&self, mesh: usize) -> Vec<(f64, f64, f64)> {
        let mesh = mesh.max(1);
        (0..=mesh)
            .map(|i| {
                let t = i as f64 / mesh as f64;
                if i == mesh {
                    return (t, 0.0, 0.0);
                }
                let nu = self.nu_of_t(t);
                let y = self.shape.sf(nu);
                let r = if t < self.q { self.h } else { self.r(nu) };
                (t, y, r)
            })
            .collect()
    }

    /// `|t(∞) - 1|`, a check on `c_l`.
    pub fn horizon_defect(&self) -> f64 {
        (self.t(f64::INFINITY) - 1.0).abs()
    }
}
