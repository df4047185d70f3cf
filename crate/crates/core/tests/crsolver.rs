use approx::assert_abs_diff_eq;
use prophet_core::crsolver::*;
use prophet_core::specfun::GammaShape;
use proptest::prelude::*;

const TOL: f64 = 1e-12;

/// `(1 - α, α)` equation value at `c`, integrated in its gamma form with a plain
/// composite Simpson rule on `[0, 200]`.
fn mixture_equation_simpson(alpha: f64, c: f64, cells: usize) -> f64 {
    let p = [1.0 - alpha, alpha];
    let comps: Vec<(u64, f64)> = (0..2)
        .map(|i| (i as u64 + 1, (p[i] - p.get(i + 1).copied().unwrap_or(0.0)) / p[0]))
        .filter(|c| c.1 > 0.0)
        .collect();
    let d = c - 1.0 / p[0];
    let f = |nu: f64| {
        let num: f64 = comps.iter().map(|&(s, w)| w * GammaShape::new(s).unwrap().density(nu)).sum();
        let den: f64 = comps
            .iter()
            .map(|&(s, w)| w * s as f64 * GammaShape::new(s + 1).unwrap().sf(nu))
            .sum();
        num / (d + den)
    };
    let (a, b) = (0.0, 200.0);
    let h = (b - a) / cells as f64;
    let mut s = f(a) + f(b);
    for i in 1..cells {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn printed_single_selection_ratios() {
    let printed = [(1, 0.745, 3), (2, 0.966, 3), (3, 0.997, 3), (4, 0.9998, 4), (5, 0.999993, 6)];
    for (ell, v, digits) in printed {
        let r = solve_cr_ell(ell, TOL).unwrap();
        let half = 0.5 * 10f64.powi(-digits);
        assert!((r.cr - v).abs() <= half, "ell {ell}: {}", r.cr);
        assert!(r.residual <= 1e-10);
        assert_abs_diff_eq!(r.cr, ell as f64 / r.c_ell, epsilon = 1e-15);
    }
}

#[test]
fn high_precision_regression() {
    // stable across quadrature tolerance 1e-10 and 1e-12
    for ell in 1..=5 {
        let a = solve_cr_ell(ell, 1e-10).unwrap();
        let b = solve_cr_ell(ell, TOL).unwrap();
        assert!((a.cr - b.cr).abs() < 1e-9, "ell {ell}");
    }
    let r4 = solve_cr_ell(4, TOL).unwrap();
    let r5 = solve_cr_ell(5, TOL).unwrap();
    assert_abs_diff_eq!(r4.one_minus_cr, PINNED_ONE_MINUS_CR4, epsilon = 1e-10);
    assert_abs_diff_eq!(r5.one_minus_cr, PINNED_ONE_MINUS_CR5, epsilon = 1e-11);
}

const PINNED_ONE_MINUS_CR4: f64 = 1.512942930204e-4;
const PINNED_ONE_MINUS_CR5: f64 = 7.436054937673e-6;
const PINNED_MIXTURE_075: f64 = 0.870492068356;

#[test]
fn exponential_lower_bound_holds() {
    assert_abs_diff_eq!(exp_lower_bound(1), 0.6321206, epsilon = 1e-7);
    assert_abs_diff_eq!(exp_lower_bound(2), 0.8646647, epsilon = 1e-7);
    let mut prev = f64::INFINITY;
    for ell in 1..=10 {
        let r = solve_cr_ell(ell, TOL).unwrap();
        assert!(r.cr > exp_lower_bound(ell), "ell {ell}");
        assert!(r.one_minus_cr < prev);
        prev = r.one_minus_cr;
    }
}

#[test]
fn equation_forms_agree_at_solution() {
    for ell in 1..=5 {
        let r = solve_cr_ell(ell, TOL).unwrap();
        let a = ratio_integral(ell, r.c_ell);
        let b = ratio_integral_gamma_form(ell, r.c_ell);
        assert!((a - b).abs() < 1e-10, "ell {ell}: {a} vs {b}");
        assert!((cr_equation_integral(ell, r.cr) - 1.0).abs() < 1e-8, "ell {ell}");
    }
}

#[test]
fn integral_decreasing_on_bracket() {
    for ell in 1..=6 {
        let pts = integral_on_bracket(ell, 20);
        assert!(pts.windows(2).all(|w| w[1].1 < w[0].1), "ell {ell}");
    }
}

#[test]
fn uniform_mixture_matches_depth() {
    for ell in 1..=5usize {
        let m = solve_cr_mixture(&MixtureWeights::uniform(ell).unwrap(), TOL).unwrap();
        let r = solve_cr_ell(ell as u32, TOL).unwrap();
        assert!((m.cr - r.cr).abs() < 1e-8, "ell {ell}");
    }
}

#[test]
fn two_point_mixture_interpolates() {
    let m = solve_cr_mixture(&MixtureWeights::new(vec![0.75, 0.25]).unwrap(), TOL).unwrap();
    let lo = solve_cr_ell(1, TOL).unwrap().cr;
    let hi = solve_cr_ell(2, TOL).unwrap().cr;
    assert!(lo < m.cr && m.cr < hi);
    let coarse = mixture_equation_simpson(0.25, m.c, 200_000);
    let fine = mixture_equation_simpson(0.25, m.c, 400_000);
    assert!((coarse - fine).abs() < 1e-8);
    assert!((fine - 1.0).abs() < 1e-8, "{fine}");
    assert_abs_diff_eq!(m.cr, PINNED_MIXTURE_075, epsilon = 1e-9);
}

#[test]
fn invalid_weights_rejected() {
    assert!(MixtureWeights::new(vec![0.25, 0.75]).is_err());
    assert!(MixtureWeights::new(vec![0.5, 0.4]).is_err());
    assert!(MixtureWeights::new(vec![]).is_err());
    assert!(solve_cr_ell(0, TOL).is_err());
}

#[test]
fn prophet_worst_values() {
    assert_eq!(prophet_worst(2, 1), 1.0);
    assert_eq!(prophet_worst(1, 3), 3.0);
    assert_eq!(prophet_worst(4, 4), 1.0);
}

proptest! {
    #[test]
    fn prophet_worst_is_max(k in 1u32..50, ell in 1u32..50) {
        prop_assert_eq!(prophet_worst(k, ell), (ell as f64 / k as f64).max(1.0));
    }

    #[test]
    fn mixture_monotone_in_alpha(a in 0.0f64..0.49, step in 0.005f64..0.01) {
        let lo = solve_cr_mixture(&MixtureWeights::two_point(a).unwrap(), 1e-10).unwrap().cr;
        let hi = solve_cr_mixture(&MixtureWeights::two_point(a + step).unwrap(), 1e-10).unwrap().cr;
        prop_assert!(hi > lo);
    }
}
