//! Multi-selection boundary value problems.
//!
//! The discrete grid has one layer per selection index `j`, each solved by
//! log-space shooting on its first free value `b_j^j`, which also fixes the
//! coupling constant `θ_j(n)`. The continuous system replaces the recurrences
//! by `db^j/dt = l(θ_j G(b^{j-1}) - G(b^j))` with `G = γ_{l+1} ∘ γ_l⁻¹`, solved
//! by sequential shooting on `θ_j`.

use crate::bvp::{solve_partition, BetaComposition};
use crate::crsolver::solve_cr_ell;
use crate::error::{Error, Result};
use crate::specfun::ln_factorial;

/// Growth exponent `r_j = -l(((l+1)/l)^j - 1)` of `b_j^j` in `n`.
pub fn growth_exponent(j: usize, ell: usize) -> f64 {
    let l = ell as f64;
    -l * (((l + 1.0) / l).powi(j as i32) - 1.0)
}

/// Layered discrete solution.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSolution {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    /// `b[j-1][i]` is `b_i^j`; entries with `i < j - 1` are unused zeros.
    pub b: Vec<Vec<f64>>,
    /// Thresholds `ε_i^j = β⁻¹_{l,n-l}(b_i^j)`, same layout as `b`.
    pub eps: Vec<Vec<f64>>,
    /// `θ_2(n)..θ_k(n)`.
    pub theta_n: Vec<f64>,
    /// `c_j(n) = b_j^j n^{-r_j}` for `j = 1..k`.
    pub c_n: Vec<f64>,
    /// `ρ_j^j` for `j = 1..k`.
    pub rho_diag: Vec<f64>,
    /// `|b_n^j - 1|` per layer.
    pub residuals: Vec<f64>,
}

impl GridSolution {
    /// `(l/k) (1/n) Σ_j ρ_j^j`.
    pub fn ratio_bound(&self) -> f64 {
        let s: f64 = self.rho_diag.iter().sum();
        self.ell as f64 / self.k as f64 * s / self.n as f64
    }
}

fn run_layer(
    comp: &BetaComposition,
    n: usize,
    ell: usize,
    j: usize,
    s: f64,
    theta: f64,
    prev_comp: &[f64],
    mut record: Option<(&mut Vec<f64>, &mut Vec<f64>)>,
) -> f64 {
    let step = ell as f64 / n as f64;
    let mut b = s;
    let mut guess: Option<f64> = None;
    if let Some((bs, es)) = record.as_mut() {
        bs.clear();
        es.clear();
        bs.resize(j, 0.0);
        es.resize(j, 0.0);
    }
    for i in j..n {
        let (c, e) = comp.eval_warm(b, guess);
        if let Some((bs, es)) = record.as_mut() {
            bs.push(b);
            es.push(e);
        }
        if e > 0.0 && e < 1.0 {
            guess = Some(e);
        }
        b = b - step * (c - theta * prev_comp[i]) + s;
    }
    if let Some((bs, es)) = record.as_mut() {
        bs.push(b);
        es.push((comp.eval_warm(b, guess)).1.max(if b >= 1.0 { 1.0 } else { 0.0 }));
    }
    b
}

/// Solves the layered grid for `k` selections.
pub fn solve_grid(n: usize, k: usize, ell: usize, tol: f64) -> Result<GridSolution> {
    if k == 0 || ell == 0 {
        return Err(Error::InvalidInput("k and ell must be positive".into()));
    }
    if n < k.max(ell) {
        return Err(Error::InvalidInput(format!("need n >= max(k, ell), got n = {n}")));
    }
    let first = solve_partition(n, ell, tol)?;
    let nf = n as f64;
    let mut b = vec![first.b.clone()];
    let mut eps = vec![first.eps.clone()];
    let mut c_n = vec![first.c_ell_n];
    let mut rho_diag = vec![1.0 / first.b[1]];
    let mut residuals = vec![first.residual];
    let mut theta_n = Vec::new();
    if k == 1 {
        return Ok(GridSolution {
            n,
            k,
            ell,
            b,
            eps,
            theta_n,
            c_n,
            rho_diag,
            residuals,
        });
    }
    if n == ell {
        return Err(Error::InvalidInput(
            "the layered grid needs n > ell for k > 1".into(),
        ));
    }
    let comp = BetaComposition::new(n, ell)?;
    let mut prev_comp: Vec<f64> = first.b.iter().map(|&x| comp.eval(x)).collect();
    for j in 2..=k {
        let anchor = prev_comp[j - 1];
        if !(anchor > 0.0) {
            return Err(Error::NonConvergence(format!(
                "layer {j}: previous diagonal composition underflowed"
            )));
        }
        let theta_of = |s: f64| nf * s / (ell as f64 * anchor);
        let f = |ln_s: f64| -> f64 {
            let s = ln_s.exp();
            run_layer(&comp, n, ell, j, s, theta_of(s), &prev_comp, None) - 1.0
        };
        let center = growth_exponent(j, ell) * nf.ln();
        let decade = std::f64::consts::LN_10;
        let mut lo = center - 2.0 * decade;
        let mut hi = (center + 2.0 * decade).min(0.0);
        let mut flo = f(lo);
        let mut fhi = f(hi);
        let mut expansions = 0;
        while !(flo <= 0.0 && fhi >= 0.0) {
            expansions += 1;
            if expansions > 20 {
                return Err(Error::Bracket(format!(
                    "layer {j}: b_n^j - 1 does not change sign near n^r (n = {n}, ell = {ell})"
                )));
            }
            if flo > 0.0 {
                lo -= 2.0 * decade;
                if lo < -690.0 {
                    return Err(Error::Bracket(format!("layer {j}: lower bracket underflows")));
                }
                flo = f(lo);
            }
            if fhi < 0.0 {
                hi = (hi + 2.0 * decade).min(0.0);
                fhi = f(hi);
                if hi == 0.0 && fhi < 0.0 {
                    return Err(Error::Bracket(format!("layer {j}: upper bracket reached 1")));
                }
            }
        }
        let (mut best, mut best_r) = if -flo < fhi { (lo, -flo) } else { (hi, fhi) };
        for _ in 0..200 {
            if best_r <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = f(mid);
            if fm.abs() < best_r {
                best = mid;
                best_r = fm.abs();
            }
            if fm < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = best.exp();
        let theta = theta_of(s);
        let mut bj = Vec::with_capacity(n + 1);
        let mut ej = Vec::with_capacity(n + 1);
        let bn = run_layer(&comp, n, ell, j, s, theta, &prev_comp, Some((&mut bj, &mut ej)));
        let residual = (bn - 1.0).abs();
        if residual > tol.max(1e-8) {
            return Err(Error::NonConvergence(format!(
                "layer {j}: shooting stalled at |b_n - 1| = {residual:e}"
            )));
        }
        prev_comp = bj
            .iter()
            .enumerate()
            .map(|(i, &x)| if i + 1 < j { 0.0 } else { comp.eval(x) })
            .collect();
        let rho_prev = *rho_diag.last().expect("layer 1 present");
        rho_diag.push(rho_prev / theta);
        theta_n.push(theta);
        c_n.push(s * nf.powf(-growth_exponent(j, ell)));
        residuals.push(residual);
        b.push(bj);
        eps.push(ej);
    }
    Ok(GridSolution {
        n,
        k,
        ell,
        b,
        eps,
        theta_n,
        c_n,
        rho_diag,
        residuals,
    })
}

/// `G(x) = γ_{l+1}(γ_l⁻¹(x))` with absolute accuracy, tuned for the ODE inner loop.
#[derive(Debug, Clone, Copy)]
pub struct GammaComposition {
    ell: usize,
}

/// Arguments are clamped here before inverting `γ_l`.
pub const ODE_CLAMP: f64 = 1.0 - 1e-12;

impl GammaComposition {
    pub fn new(ell: usize) -> Self {
        assert!(ell >= 1);
        Self { ell }
    }

    /// Returns `(γ_l(ν), e^{-ν} ν^{l-1} / (l-1)!, e^{-ν} ν^l / l!)`.
    fn parts(&self, nu: f64) -> (f64, f64, f64) {
        let l = self.ell;
        let mut t = (-nu).exp();
        let mut below = 0.0;
        let mut dens = t;
        for j in 0..l {
            below += t;
            dens = t;
            t *= nu / (j + 1) as f64;
        }
        let top = t;
        if nu < l as f64 {
            let mut s = t;
            let mut j = l;
            loop {
                j += 1;
                t *= nu / j as f64;
                s += t;
                if t <= 1e-17 * s {
                    break;
                }
            }
            (s, dens, top)
        } else {
            (1.0 - below, dens, top)
        }
    }

    fn initial_guess(&self, x: f64) -> f64 {
        let l = self.ell as f64;
        let g = ((x.ln() + ln_factorial(self.ell as u64)) / l).exp();
        if g.is_finite() && g > 0.0 && g < l {
            g
        } else {
            l
        }
    }

    /// Newton for `γ_l(ν) = x`; returns `(ν, G(x))` with `G` corrected to first order
    /// for the final step.
    fn solve(&self, x: f64, guess: f64) -> (f64, f64) {
        let mut nu = if guess > 0.0 && guess.is_finite() {
            guess
        } else {
            self.initial_guess(x)
        };
        let mut lo = 0.0;
        let mut hi = f64::INFINITY;
        for _ in 0..200 {
            let (g, d, top) = self.parts(nu);
            let f = g - x;
            let gnext = g - top;
            if f == 0.0 {
                return (nu, gnext.max(0.0));
            }
            if f < 0.0 {
                lo = nu;
            } else {
                hi = nu;
            }
            let newton = nu - f / d;
            if d > 0.0 && newton > lo && newton < hi {
                let step = newton - nu;
                if step.abs() <= 1e-7 * nu {
                    return (newton, (gnext + top * step).max(0.0));
                }
                nu = newton;
            } else {
                let next = if hi.is_infinite() {
                    2.0 * nu.max(1.0)
                } else if lo == 0.0 {
                    0.1 * hi
                } else {
                    0.5 * (lo + hi)
                };
                if hi - lo <= 1e-15 * lo {
                    return (next, gnext.max(0.0));
                }
                nu = next;
            }
        }
        let (g, _, top) = self.parts(nu);
        (nu, (g - top).max(0.0))
    }

    /// `γ_l⁻¹(x)` with `x` clamped to `[0, ODE_CLAMP]`.
    pub fn inv_from(&self, x: f64, guess: f64) -> f64 {
        let x = x.clamp(0.0, ODE_CLAMP);
        if x == 0.0 {
            return 0.0;
        }
        self.solve(x, guess).0
    }

    /// `G(x)` and the `γ_l⁻¹(x)` used, extended by 0 below 0 and 1 at or above 1.
    pub fn eval_from(&self, x: f64, guess: f64) -> (f64, f64) {
        if x <= 0.0 {
            return (0.0, 0.0);
        }
        if x >= 1.0 {
            return (1.0, guess);
        }
        let (nu, g) = self.solve(x.min(ODE_CLAMP), guess);
        (g, nu)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_from(x, 0.0).0
    }
}

/// Sequential shooting state for the continuous system on a uniform mesh.
#[derive(Debug, Clone)]
pub struct OdeShooter {
    ell: usize,
    mesh: usize,
    comp: GammaComposition,
    /// Accepted trajectories `b^j` at the `mesh + 1` grid points.
    layers: Vec<Vec<f64>>,
    /// `l G(b^{j-1})` at the `2 mesh + 1` grid and half-grid points of the last layer.
    drive: Vec<f64>,
}

impl OdeShooter {
    /// Integrates layer 1 with constant `c` (normally `c_l`).
    pub fn new(ell: usize, c: f64, mesh: usize) -> Result<Self> {
        if ell == 0 || mesh < 2 {
            return Err(Error::InvalidInput("need ell >= 1 and mesh >= 2".into()));
        }
        let comp = GammaComposition::new(ell);
        let l = ell as f64;
        let h = 1.0 / mesh as f64;
        let mut b = Vec::with_capacity(mesh + 1);
        let mut y = 0.0;
        let mut nu = 0.0;
        b.push(y);
        let mut rhs = |x: f64| -> f64 {
            let (g, v) = comp.eval_from(x, nu);
            if v > 0.0 && v.is_finite() {
                nu = v;
            }
            c - l * g
        };
        for _ in 0..mesh {
            let k1 = rhs(y);
            let k2 = rhs(y + 0.5 * h * k1);
            let k3 = rhs(y + 0.5 * h * k2);
            let k4 = rhs(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            b.push(y);
        }
        let mut s = Self {
            ell,
            mesh,
            comp,
            layers: vec![b],
            drive: Vec::new(),
        };
        s.refresh_drive(|x| c - l * x);
        Ok(s)
    }

    /// Rebuilds the drive term from the last accepted layer, using cubic Hermite
    /// interpolation with slopes `slope(G(b))` for the half-step values.
    fn refresh_drive<F: Fn(f64) -> f64>(&mut self, slope_of_g: F) {
        let b = self.layers.last().expect("at least one layer");
        let l = self.ell as f64;
        let h = 1.0 / self.mesh as f64;
        let mut nu = 0.0;
        let mut g_at = |x: f64| -> f64 {
            let (g, v) = self.comp.eval_from(x, nu);
            if v > 0.0 && v.is_finite() {
                nu = v;
            }
            g
        };
        let mut drive = Vec::with_capacity(2 * self.mesh + 1);
        let mut g0 = g_at(b[0]);
        drive.push(l * g0);
        for i in 0..self.mesh {
            let g1 = g_at(b[i + 1]);
            let f0 = slope_of_g(g0);
            let f1 = slope_of_g(g1);
            let mid = 0.5 * (b[i] + b[i + 1]) + h * (f0 - f1) / 8.0;
            let gm = g_at(mid);
            drive.push(l * gm);
            drive.push(l * g1);
            g0 = g1;
        }
        self.drive = drive;
    }

    /// Integrates the next layer for coupling `theta`; returns the trajectory.
    fn integrate(&self, theta: f64, keep: bool) -> (f64, Vec<f64>) {
        let l = self.ell as f64;
        let h = 1.0 / self.mesh as f64;
        let comp = self.comp;
        let mut nu = 0.0;
        let mut rhs = |x: f64, d: f64| -> f64 {
            let (g, v) = comp.eval_from(x, nu);
            if v > 0.0 && v.is_finite() {
                nu = v;
            }
            theta * d - l * g
        };
        let mut y = 0.0;
        let mut out = Vec::new();
        if keep {
            out.reserve(self.mesh + 1);
            out.push(y);
        }
        for i in 0..self.mesh {
            let d0 = self.drive[2 * i];
            let dm = self.drive[2 * i + 1];
            let d1 = self.drive[2 * i + 2];
            let k1 = rhs(y, d0);
            let k2 = rhs(y + 0.5 * h * k1, dm);
            let k3 = rhs(y + 0.5 * h * k2, dm);
            let k4 = rhs(y + h * k3, d1);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if keep {
                out.push(y);
            }
        }
        (y, out)
    }

    /// `b^j(1)` of the next layer for coupling `theta`.
    pub fn layer_end(&self, theta: f64) -> f64 {
        self.integrate(theta, false).0
    }

    /// Fixes `theta` for the next layer and makes it the drive of the one after.
    pub fn accept(&mut self, theta: f64) {
        let (_, traj) = self.integrate(theta, true);
        self.layers.push(traj);
        let l = self.ell as f64;
        let last_drive = self.drive.clone();
        let h = 1.0 / self.mesh as f64;
        let b = self.layers.last().expect("just pushed").clone();
        let comp = self.comp;
        let mut nu = 0.0;
        let mut g_at = |x: f64| -> f64 {
            let (g, v) = comp.eval_from(x, nu);
            if v > 0.0 && v.is_finite() {
                nu = v;
            }
            g
        };
        let mut drive = Vec::with_capacity(2 * self.mesh + 1);
        let mut g0 = g_at(b[0]);
        drive.push(l * g0);
        for i in 0..self.mesh {
            let g1 = g_at(b[i + 1]);
            let f0 = theta * last_drive[2 * i] - l * g0;
            let f1 = theta * last_drive[2 * i + 2] - l * g1;
            let mid = 0.5 * (b[i] + b[i + 1]) + h * (f0 - f1) / 8.0;
            drive.push(l * g_at(mid));
            drive.push(l * g1);
            g0 = g1;
        }
        self.drive = drive;
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn mesh(&self) -> usize {
        self.mesh
    }

    /// Illinois regula falsi on `theta` so the next layer ends at 1; `seed` is a starting guess.
    pub fn solve_next(&self, seed: f64, tol: f64) -> Result<f64> {
        let f = |t: f64| self.layer_end(t) - 1.0;
        let width = 1e-3 * seed.max(1.0);
        let mut lo = (seed - width).max(1e-6);
        let mut hi = seed + width;
        let mut flo = f(lo);
        let mut fhi = f(hi);
        let mut guard = 0;
        while flo > 0.0 {
            hi = lo;
            fhi = flo;
            lo *= 0.5;
            flo = f(lo);
            guard += 1;
            if guard > 60 {
                return Err(Error::Bracket("theta lower end never undershoots".into()));
            }
        }
        while fhi < 0.0 {
            lo = hi;
            flo = fhi;
            hi *= 2.0;
            fhi = f(hi);
            guard += 1;
            if guard > 120 {
                return Err(Error::Bracket("theta upper end never overshoots".into()));
            }
        }
        let mut side = 0i8;
        let mut x = lo;
        let mut fx = flo;
        for _ in 0..100 {
            x = hi - fhi * (hi - lo) / (fhi - flo);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            fx = f(x);
            if fx.abs() <= tol || hi - lo <= 1e-13 * x {
                return Ok(x);
            }
            if fx < 0.0 {
                lo = x;
                flo = fx;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            } else {
                hi = x;
                fhi = fx;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            }
        }
        if fx.abs() > tol.max(1e-9) {
            return Err(Error::NonConvergence(format!("theta = {x} leaves end defect {fx:e}")));
        }
        Ok(x)
    }
}

/// Continuous coupling constants and the resulting guarantee.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThetaSchedule {
    pub k: usize,
    pub ell: usize,
    /// `θ_1 = 1, θ_2, ..., θ_k`.
    pub theta: Vec<f64>,
    /// `CR_l`.
    pub cr_ell: f64,
    /// `(CR_l / k) Σ_j Π_{t≤j} θ_t⁻¹`.
    pub cr_bound: f64,
    /// Layer-1 end value `b^1(1)` obtained with `c_l`.
    pub layer1_end: f64,
    /// `θ` from the same solve at half the mesh (Richardson comparison).
    pub theta_half_mesh: Vec<f64>,
    pub mesh: usize,
    /// Trajectories `b^j` on the uniform mesh `t_i = i / mesh`.
    pub ode_grid: Vec<Vec<f64>>,
}

impl ThetaSchedule {
    /// Guarantee for `k' <= k` selections from the same constants.
    pub fn bound_for(&self, k: usize) -> f64 {
        bound_from_theta(self.cr_ell, &self.theta[..k.min(self.theta.len())])
    }

    /// Largest `|θ_j(mesh) - θ_j(mesh/2)|`.
    pub fn richardson_gap(&self) -> f64 {
        self.theta
            .iter()
            .zip(&self.theta_half_mesh)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn bound_from_theta(cr: f64, theta: &[f64]) -> f64 {
    let mut prod = 1.0;
    let mut sum = 0.0;
    for t in theta {
        prod /= t;
        sum += prod;
    }
    cr / theta.len() as f64 * sum
}

fn solve_thetas(ell: usize, c: f64, k: usize, mesh: usize, tol: f64, seeds: &[f64]) -> Result<(Vec<f64>, OdeShooter)> {
    let mut sh = OdeShooter::new(ell, c, mesh)?;
    let mut theta = vec![1.0];
    for j in 2..=k {
        let seed = seeds.get(j - 1).copied().unwrap_or_else(|| match j {
            2 => 1.0 + 1.0 / ell as f64,
            _ => theta[j - 2] * theta[j - 2] / theta[j - 3],
        });
        let t = sh.solve_next(seed, tol)?;
        if j < k {
            sh.accept(t);
        }
        theta.push(t);
    }
    Ok((theta, sh))
}

/// Solves the continuous system for `k` selections at depth `l`.
pub fn solve_ode_system(k: usize, ell: usize, mesh: usize, tol: f64) -> Result<ThetaSchedule> {
    if k == 0 || ell == 0 {
        return Err(Error::InvalidInput("k and ell must be positive".into()));
    }
    if mesh < 4 {
        return Err(Error::InvalidInput("mesh must be at least 4".into()));
    }
    let cr = solve_cr_ell(ell as u32, tol.min(1e-10))?;
    let (coarse, _) = solve_thetas(ell, cr.c_ell, k, mesh / 2, tol, &[])?;
    let (theta, mut sh) = solve_thetas(ell, cr.c_ell, k, mesh, tol, &coarse)?;
    if k > 1 {
        sh.accept(*theta.last().expect("k > 1"));
    }
    let layer1_end = *sh.layers()[0].last().expect("mesh >= 1");
    if (layer1_end - 1.0).abs() > 1e-5 {
        return Err(Error::NonConvergence(format!(
            "layer 1 ends at {layer1_end}, expected 1"
        )));
    }
    let ode_grid = sh.layers().to_vec();
    Ok(ThetaSchedule {
        k,
        ell,
        cr_bound: bound_from_theta(cr.cr, &theta),
        theta,
        cr_ell: cr.cr,
        layer1_end,
        theta_half_mesh: coarse,
        mesh,
        ode_grid,
    })
}

/// Discrete-versus-continuous comparison of the coupling constants.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThetaRelationReport {
    /// `(n, [|θ_j(n) - θ_j| for j = 2..k])`.
    pub gaps: Vec<(usize, Vec<f64>)>,
    /// Relative residual of `θ_j ≈ (l+1) c_j / (l (l!)^{1/l} c_{j-1}^{1+1/l})`
    /// with the `c_j(n)` of the largest grid, for `j = 2..k`.
    pub relation_residual: Vec<f64>,
}

pub fn theta_c_relation(schedule: &ThetaSchedule, grids: &[GridSolution]) -> ThetaRelationReport {
    let kk = schedule.k;
    let gaps: Vec<(usize, Vec<f64>)> = grids
        .iter()
        .map(|g| {
            let v = (2..=kk.min(g.k))
                .map(|j| (g.theta_n[j - 2] - schedule.theta[j - 1]).abs())
                .collect();
            (g.n, v)
        })
        .collect();
    let mut relation_residual = Vec::new();
    if let Some(g) = grids.iter().max_by_key(|g| g.n) {
        let l = schedule.ell as f64;
        let lf = ln_factorial(schedule.ell as u64).exp().powf(1.0 / l);
        for j in 2..=kk.min(g.k) {
            let cj = g.c_n[j - 1];
            let cprev = g.c_n[j - 2];
            let predicted = (l + 1.0) * cj / (l * lf * cprev.powf(1.0 + 1.0 / l));
            let target = schedule.theta[j - 1];
            relation_residual.push((predicted - target).abs() / target);
        }
    }
    ThetaRelationReport {
        gaps,
        relation_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::GammaShape;

    #[test]
    fn gamma_composition_matches_specfun() {
        for ell in 1..=5usize {
            let c = GammaComposition::new(ell);
            let g = GammaShape::new(ell as u64).unwrap();
            let g1 = GammaShape::new(ell as u64 + 1).unwrap();
            for i in 1..100 {
                let x = i as f64 / 100.0;
                let want = g1.cdf(g.inv(x));
                assert!((c.eval(x) - want).abs() < 1e-13, "ell={ell} x={x}");
            }
        }
    }

    #[test]
    fn grid_with_one_layer_is_the_partition() {
        let g = solve_grid(40, 1, 2, 1e-12).unwrap();
        let p = solve_partition(40, 2, 1e-12).unwrap();
        assert_eq!(g.b[0], p.b);
        assert!(g.theta_n.is_empty());
        assert!((g.ratio_bound() - p.ratio_bound()).abs() < 1e-15);
    }

    #[test]
    fn growth_exponent_first_layer() {
        assert!((growth_exponent(1, 3) + 1.0).abs() < 1e-15);
        assert!((growth_exponent(2, 1) + 3.0).abs() < 1e-15);
    }
}
