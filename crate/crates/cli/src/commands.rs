use prophet_core::balayage::{reduce_instance, support_bound, DiscreteDistribution};
use prophet_core::bvp::{certify_equalization, solve_partition};
use prophet_core::crsolver::{solve_cr_ell, solve_cr_mixture, MixtureWeights};
use prophet_core::multibvp::{growth_exponent, solve_grid, solve_ode_system};
use prophet_core::simkit::{
    build_worstcase_instance, opt_topl, simulate_policy, worstcase_bdp_ratio, DistributionModel, OptMethod, PolicySpec,
};
use prophet_core::staticthresh::{
    best_static_rule, build_static_worstcase, expected_demand_threshold, lambda_grid_check, static_cr, static_lower_bound,
    static_ratio,
};
use serde_json::json;

use crate::config::{Command, FigureKind, PolicyKind, RunConfig};
use crate::output::{Cell, Output};
use crate::CliError;

const TABLE_DEPTHS: u32 = 5;
const DEFAULT_WORSTCASE_N: usize = 5000;

fn need<T: Copy>(v: Option<T>, flag: &str, cmd: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("{cmd} needs --{flag}")))
}

fn model(cfg: &RunConfig, cmd: &str) -> Result<DistributionModel, CliError> {
    let spec = cfg
        .dist
        .as_ref()
        .ok_or_else(|| CliError::Validation(format!("{cmd} needs --dist")))?;
    Ok(DistributionModel::from_spec(spec)?)
}

/// Executes the command described by `cfg`.
pub fn run(cfg: &RunConfig) -> Result<Output, CliError> {
    cfg.check()?;
    match cfg.command {
        Command::Table1 => table1(cfg),
        Command::Table2 => table2(cfg),
        Command::FigureData => figure_data(cfg),
        Command::Cr => cr(cfg),
        Command::CrMixture => cr_mixture(cfg),
        Command::Bvp => bvp(cfg),
        Command::Grid => grid(cfg),
        Command::Ode => ode(cfg),
        Command::Simulate => simulate(cfg),
        Command::Static => static_cmd(cfg),
        Command::Worstcase => worstcase(cfg),
        Command::Reduce => reduce(cfg),
    }
}

fn table1(cfg: &RunConfig) -> Result<Output, CliError> {
    let mut out = Output::new(&["ell", "cr"]);
    let mut details = Vec::new();
    for ell in 1..=TABLE_DEPTHS {
        let r = solve_cr_ell(ell, cfg.tol)?;
        out.push(vec![ell.into(), r.cr.into()]);
        details.push(r);
    }
    Ok(out.details(&details))
}

fn table2(cfg: &RunConfig) -> Result<Output, CliError> {
    let kmax = TABLE_DEPTHS as usize;
    let mut cells: Vec<Vec<(Cell, Cell)>> = vec![Vec::new(); kmax];
    let mut details = Vec::new();
    for ell in 1..=kmax {
        match solve_ode_system(kmax, ell, cfg.mesh, cfg.tol) {
            Ok(s) => {
                for (k, row) in cells.iter_mut().enumerate() {
                    row.push((s.bound_for(k + 1).into(), "ok".into()));
                }
                details.push(json!({
                    "ell": ell,
                    "theta": s.theta,
                    "layer1_end": s.layer1_end,
                    "richardson_gap": s.richardson_gap(),
                }));
            }
            Err(e) => {
                for row in cells.iter_mut() {
                    row.push((Cell::Empty, Cell::Text(e.to_string())));
                }
                details.push(json!({ "ell": ell, "error": e.to_string() }));
            }
        }
    }
    let mut out = Output::new(&["k", "ell", "bound", "status"]);
    for (k, row) in cells.into_iter().enumerate() {
        for (ell, (bound, status)) in row.into_iter().enumerate() {
            out.push(vec![(k + 1).into(), (ell + 1).into(), bound, status]);
        }
    }
    Ok(out.details(&details))
}

fn figure_data(cfg: &RunConfig) -> Result<Output, CliError> {
    match cfg.which.expect("checked by RunConfig::check") {
        FigureKind::CrLb => {
            let mut out = Output::new(&["ell", "one_minus_cr", "exp_minus_ell"]);
            for ell in 1..=10u32 {
                let r = solve_cr_ell(ell, cfg.tol)?;
                out.push(vec![ell.into(), r.one_minus_cr.into(), (-(ell as f64)).exp().into()]);
            }
            Ok(out)
        }
        FigureKind::StaticHeatmap => {
            let mut out = Output::new(&["k", "ell", "value", "value_over_limit"]);
            for k in 1..=15u32 {
                for ell in 1..=15u32 {
                    let v = static_cr(k, ell)?.value;
                    let limit = (ell as f64 / k as f64).min(1.0);
                    out.push(vec![k.into(), ell.into(), v.into(), (v / limit).into()]);
                }
            }
            Ok(out)
        }
        FigureKind::OdeTraj => {
            let ell = cfg.ell.unwrap_or(1) as usize;
            let k = cfg.k.unwrap_or(3) as usize;
            let s = solve_ode_system(k, ell, cfg.mesh, cfg.tol)?;
            let stride = (s.mesh / 1000).max(1);
            let mut out = Output::new(&["j", "t", "b"]);
            for (j, layer) in s.ode_grid.iter().enumerate() {
                for i in (0..layer.len()).step_by(stride) {
                    out.push(vec![(j + 1).into(), (i as f64 / s.mesh as f64).into(), layer[i].into()]);
                }
            }
            Ok(out.details(&json!({ "ell": ell, "k": k, "theta": s.theta })))
        }
        FigureKind::CrAlpha => {
            let mut out = Output::new(&["alpha", "cr"]);
            for i in 0..=10 {
                let alpha = i as f64 / 20.0;
                let r = solve_cr_mixture(&MixtureWeights::two_point(alpha)?, cfg.tol)?;
                out.push(vec![alpha.into(), r.cr.into()]);
            }
            Ok(out)
        }
    }
}

fn cr(cfg: &RunConfig) -> Result<Output, CliError> {
    let ell = need(cfg.ell, "ell", "cr")?;
    let r = solve_cr_ell(ell, cfg.tol)?;
    let mut out = Output::new(&["ell", "c_ell", "cr", "one_minus_cr", "residual"]);
    out.push(vec![ell.into(), r.c_ell.into(), r.cr.into(), r.one_minus_cr.into(), r.residual.into()]);
    Ok(out.details(&r))
}

fn cr_mixture(cfg: &RunConfig) -> Result<Output, CliError> {
    let alpha = need(cfg.alpha, "alpha", "cr-mixture")?;
    let r = solve_cr_mixture(&MixtureWeights::two_point(alpha)?, cfg.tol)?;
    let mut out = Output::new(&["alpha", "c", "cr", "residual"]);
    out.push(vec![alpha.into(), r.c.into(), r.cr.into(), r.residual.into()]);
    Ok(out.details(&r))
}

fn bvp(cfg: &RunConfig) -> Result<Output, CliError> {
    let n = need(cfg.n, "n", "bvp")?;
    let ell = need(cfg.ell, "ell", "bvp")? as usize;
    let sol = solve_partition(n, ell, cfg.tol)?;
    let spread = if n > ell { Some(certify_equalization(&sol)?.max_spread) } else { None };
    let mut out = Output::new(&["i", "b", "eps"]);
    for i in 0..=n {
        out.push(vec![i.into(), sol.b[i].into(), sol.eps[i].into()]);
    }
    Ok(out.details(&json!({
        "n": n,
        "ell": ell,
        "c_ell_n": sol.c_ell_n,
        "ratio_bound": sol.ratio_bound(),
        "residual": sol.residual,
        "max_spread": spread,
    })))
}

fn grid(cfg: &RunConfig) -> Result<Output, CliError> {
    let n = need(cfg.n, "n", "grid")?;
    let k = need(cfg.k, "k", "grid")? as usize;
    let ell = need(cfg.ell, "ell", "grid")? as usize;
    let g = solve_grid(n, k, ell, cfg.tol)?;
    let mut out = Output::new(&["j", "theta_n", "c_n", "growth_exponent", "residual"]);
    for j in 1..=k {
        let theta = if j == 1 { 1.0 } else { g.theta_n[j - 2] };
        out.push(vec![
            j.into(),
            theta.into(),
            g.c_n[j - 1].into(),
            growth_exponent(j, ell).into(),
            g.residuals[j - 1].into(),
        ]);
    }
    Ok(out.details(&json!({ "n": n, "k": k, "ell": ell, "ratio_bound": g.ratio_bound() })))
}

fn ode(cfg: &RunConfig) -> Result<Output, CliError> {
    let k = need(cfg.k, "k", "ode")? as usize;
    let ell = need(cfg.ell, "ell", "ode")? as usize;
    let s = solve_ode_system(k, ell, cfg.mesh, cfg.tol)?;
    let mut out = Output::new(&["j", "theta", "bound"]);
    for j in 1..=k {
        out.push(vec![j.into(), s.theta[j - 1].into(), s.bound_for(j).into()]);
    }
    Ok(out.details(&json!({
        "k": k,
        "ell": ell,
        "mesh": s.mesh,
        "cr_ell": s.cr_ell,
        "cr_bound": s.cr_bound,
        "layer1_end": s.layer1_end,
        "richardson_gap": s.richardson_gap(),
    })))
}

fn simulate(cfg: &RunConfig) -> Result<Output, CliError> {
    let dist = model(cfg, "simulate")?;
    let n = need(cfg.n, "n", "simulate")?;
    let k = cfg.k.unwrap_or(1) as usize;
    let ell = cfg.ell.unwrap_or(1) as usize;
    let kind = cfg.policy.unwrap_or(if k == 1 { PolicyKind::Alg1 } else { PolicyKind::Alg2 });
    let (policy, reference) = match kind {
        PolicyKind::Alg1 => {
            let p = solve_partition(n, ell, cfg.tol)?;
            let r = p.ratio_bound();
            (PolicySpec::QuantileAlg1 { partition: p }, r)
        }
        PolicyKind::Alg2 => {
            let g = solve_grid(n, k, ell, cfg.tol)?;
            let r = g.ratio_bound();
            (PolicySpec::QuantileAlg2 { grid: g }, r)
        }
        PolicyKind::Static => {
            let rule = expected_demand_threshold(&dist, n, ell)?;
            let r = static_ratio(&dist, n, k, ell, rule)?;
            (
                PolicySpec::StaticThreshold {
                    threshold: rule.threshold,
                    tie_prob: rule.tie_prob,
                },
                r,
            )
        }
        PolicyKind::Bdp => {
            let v = prophet_core::simkit::bdp_value(&dist, n, k)?;
            let opt = opt_topl(&dist, n, ell, OptMethod::Quadrature)?.value;
            (PolicySpec::BdpOptimal { k }, v.ratio(opt, ell))
        }
    };
    let rep = simulate_policy(&dist, n, k, ell, &policy, cfg.trials, cfg.seed)?;
    let mut out = Output::new(&[
        "mean_alg",
        "se_alg",
        "mean_benchmark",
        "se_benchmark",
        "ratio",
        "ratio_se",
        "reference",
    ]);
    out.push(vec![
        rep.mean_alg.into(),
        rep.se_alg.into(),
        rep.mean_benchmark.into(),
        rep.se_benchmark.into(),
        rep.ratio.into(),
        rep.ratio_se.into(),
        reference.into(),
    ]);
    Ok(out.details(&rep))
}

fn static_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let k = need(cfg.k, "k", "static")?;
    let ell = need(cfg.ell, "ell", "static")?;
    let v = static_cr(k, ell)?.value;
    let grid = lambda_grid_check(k, ell, 0.5 * ell as f64, 2.0 * ell as f64, 1e-3)?;
    let mut out = Output::new(&[
        "k",
        "ell",
        "static_cr",
        "w",
        "lambda_argmax",
        "n",
        "lower_bound",
        "demand_ratio",
        "worst_instance_ratio",
    ]);
    let mut details = json!({ "lambda_grid": grid });
    let mut row: Vec<Cell> = vec![k.into(), ell.into(), v.into(), grid.w.into(), grid.argmax.into()];
    match cfg.n {
        Some(n) => {
            let (kk, ll) = (k as usize, ell as usize);
            let lower = static_lower_bound(kk, ll, n);
            let demand = match &cfg.dist {
                Some(_) => {
                    let dist = model(cfg, "static")?;
                    let rule = expected_demand_threshold(&dist, n, ll)?;
                    details["demand_rule"] = json!(rule);
                    Cell::Num(static_ratio(&dist, n, kk, ll, rule)?)
                }
                None => Cell::Empty,
            };
            let wc = build_static_worstcase(k, ell, n)?;
            let (best, best_ratio) = best_static_rule(&wc.dist()?, n, kk, ll)?;
            details["worst_instance"] = json!(wc);
            details["worst_instance_best_rule"] = json!(best);
            row.extend([n.into(), lower.into(), demand, best_ratio.into()]);
        }
        None => row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]),
    }
    out.push(row);
    Ok(out.details(&details))
}

fn worstcase(cfg: &RunConfig) -> Result<Output, CliError> {
    let ell = need(cfg.ell, "ell", "worstcase")?;
    let q = need(cfg.q, "q", "worstcase")?;
    let n = cfg.n.unwrap_or(DEFAULT_WORSTCASE_N);
    let r = worstcase_bdp_ratio(ell as usize, q, n)?;
    let inst = build_worstcase_instance(ell as usize, q, 200)?;
    let limit = solve_cr_ell(ell, cfg.tol)?.cr;
    let mut out = Output::new(&["ell", "q", "n", "online", "benchmark", "ratio", "limit", "p", "h", "horizon_defect"]);
    out.push(vec![
        ell.into(),
        q.into(),
        n.into(),
        r.online.into(),
        r.benchmark.into(),
        r.ratio.into(),
        limit.into(),
        inst.p.into(),
        inst.h.into(),
        inst.horizon_defect.into(),
    ]);
    Ok(out.details(&inst))
}

fn reduce(cfg: &RunConfig) -> Result<Output, CliError> {
    let dist = model(cfg, "reduce")?;
    let n = need(cfg.n, "n", "reduce")?;
    let k = need(cfg.k, "k", "reduce")? as usize;
    let ell = cfg.ell.map_or(k, |l| l as usize);
    let d = DiscreteDistribution::from_model(&dist)?;
    let red = reduce_instance(&d, n, k)?;
    let opt_before = opt_topl(&dist, n, ell, OptMethod::Quadrature)?.value;
    let opt_after = opt_topl(&red.reduced.to_model()?, n, ell, OptMethod::Quadrature)?.value;
    let mut out = Output::new(&["value", "prob"]);
    for &(x, p) in red.reduced.atoms() {
        out.push(vec![x.into(), p.into()]);
    }
    Ok(out.details(&json!({
        "n": n,
        "k": k,
        "ell": ell,
        "value_before": red.value_before,
        "value_after": red.value_after,
        "opt_before": opt_before,
        "opt_after": opt_after,
        "support_size": red.reduced.len(),
        "support_bound": support_bound(n, k),
        "points": red.points,
    })))
}
