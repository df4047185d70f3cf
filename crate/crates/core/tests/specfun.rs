use prophet_core::quad::adaptive_simpson;
use prophet_core::specfun::*;
use proptest::prelude::*;

fn bp(a: u64, b: u64) -> BetaParams {
    BetaParams::new(a, b).unwrap()
}

fn gs(l: u64) -> GammaShape {
    GammaShape::new(l).unwrap()
}

fn ln_beta_fn(a: u64, b: u64) -> f64 {
    ln_factorial(a - 1) + ln_factorial(b - 1) - ln_factorial(a + b - 1)
}

/// `β_{a,b}(z)` by integrating the density.
fn beta_by_quadrature(a: u64, b: u64, z: f64) -> f64 {
    let lb = ln_beta_fn(a, b);
    let dens = |t: f64| {
        if t <= 0.0 || t >= 1.0 {
            return if (t <= 0.0 && a == 1) || (t >= 1.0 && b == 1) { (-lb).exp() } else { 0.0 };
        }
        ((a - 1) as f64 * t.ln() + (b - 1) as f64 * (-t).ln_1p() - lb).exp()
    };
    adaptive_simpson(dens, 0.0, z, 1e-14)
}

#[test]
fn beta_closed_forms() {
    assert!((reg_inc_beta(bp(1, 3), 0.5).unwrap() - 0.875).abs() < 1e-15);
    assert!((reg_inc_beta(bp(2, 2), 0.5).unwrap() - 0.5).abs() < 1e-15);
    assert!((reg_inc_beta_inv(bp(1, 1), 0.7).unwrap() - 0.7).abs() < 1e-12);
    assert!((reg_inc_beta_inv(bp(1, 3), 0.875).unwrap() - 0.5).abs() < 1e-12);
    assert!(reg_inc_beta(bp(2, 2), 1.5).is_err());
}

#[test]
fn gamma_closed_forms() {
    let e = (-1.0f64).exp();
    assert!((reg_inc_gamma(gs(1), 1.0).unwrap() - (1.0 - e)).abs() < 1e-15);
    assert!((reg_inc_gamma(gs(2), 1.0).unwrap() - (1.0 - 2.0 * e)).abs() < 1e-15);
    assert_eq!(reg_inc_gamma(gs(4), 0.0).unwrap(), 0.0);
    assert!((reg_inc_gamma_inv(gs(1), 1.0 - e).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(reg_inc_gamma_inv(gs(1), 0.0).unwrap(), 0.0);
    assert!(reg_inc_gamma(gs(1), -0.1).is_err());
    assert!(reg_inc_gamma_inv(gs(1), 1.0).is_err());
}

#[test]
fn beta_matches_quadrature() {
    for &(a, b, z) in &[(1, 1, 0.3), (2, 5, 0.2), (3, 40, 0.05), (7, 3, 0.9), (10, 10, 0.5)] {
        let q = beta_by_quadrature(a, b, z);
        assert!((bp(a, b).cdf(z) - q).abs() < 1e-11, "({a},{b},{z})");
    }
}

#[test]
fn limit_law_improves_with_n() {
    for ell in 1..=3u64 {
        for &z in &[0.5, 1.0, 3.0] {
            let g = gs(ell).cdf(z);
            let gaps: Vec<f64> = [100u64, 1000, 10000]
                .iter()
                .map(|&n| (bp(ell, n - ell).cdf(z / n as f64) - g).abs())
                .collect();
            assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "ell {ell} z {z}: {gaps:?}");
        }
    }
}

#[test]
fn composition_decreases_toward_gamma_limit() {
    for ell in 1..=3u64 {
        let g_in = gs(ell);
        let g_out = gs(ell + 1);
        let ns = [ell + 2, 10, 100, 1000];
        for i in 1..1000 {
            let x = i as f64 / 1000.0;
            let limit = ell as f64 * g_out.cdf(g_in.inv(x));
            let vals: Vec<f64> = ns
                .iter()
                .map(|&n| ell as f64 * bp(ell + 1, n - ell).cdf(bp(ell, n - ell).inv(x)))
                .collect();
            for w in vals.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "ell {ell} x {x}: {vals:?}");
            }
            assert!(*vals.last().unwrap() >= limit - 1e-12, "ell {ell} x {x}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn beta_inverse_round_trip(a in 1u64..30, b in 1u64..30, x in 0.0f64..=1.0) {
        let p = bp(a, b);
        let y = reg_inc_beta(p, x).unwrap();
        let back = reg_inc_beta_inv(p, y).unwrap();
        // flat regions of the CDF make x unidentifiable; compare on both scales
        prop_assert!((back - x).abs() <= 1e-10 || (p.cdf(back) - y).abs() <= 1e-12,
            "x {} back {}", x, back);
    }

    #[test]
    fn gamma_inverse_round_trip(l in 1u64..=6, y in 0.0f64..0.999999) {
        let s = gs(l);
        let z = reg_inc_gamma_inv(s, y).unwrap();
        prop_assert!((reg_inc_gamma(s, z).unwrap() - y).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn shape_recurrences(ell in 1u64..8, extra in 1u64..50, z in 0.0f64..1.0) {
        let n = ell + extra;
        let m = n - ell;
        let ln_b = ln_beta_fn(ell, m);
        let kernel = (ell as f64 * z.ln() + m as f64 * (-z).ln_1p() - ln_b).exp();
        let base = beta_by_quadrature(ell, m, z);
        let up_a = base - kernel / ell as f64;
        let up_b = base + kernel / m as f64;
        prop_assert!((bp(ell + 1, m).cdf(z) - up_a).abs() < 1e-10);
        prop_assert!((bp(ell, m + 1).cdf(z) - up_b).abs() < 1e-10);
    }
}
