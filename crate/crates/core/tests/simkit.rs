use prophet_core::bvp::solve_partition;
use prophet_core::simkit::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform() -> DistributionModel {
    DistributionModel::uniform(0.0, 1.0).unwrap()
}

fn expo() -> DistributionModel {
    DistributionModel::exponential(1.0).unwrap()
}

fn all_kinds() -> Vec<DistributionModel> {
    vec![
        uniform(),
        DistributionModel::uniform(2.0, 5.0).unwrap(),
        expo(),
        DistributionModel::exponential(3.0).unwrap(),
        DistributionModel::two_point(1.0, 4.0, 0.2).unwrap(),
        DistributionModel::atoms(vec![0.0, 0.3, 1.0, 2.5], vec![0.1, 0.4, 0.3, 0.2]).unwrap(),
        DistributionModel::power(&expo(), 0.5).unwrap(),
        DistributionModel::power(&uniform(), 0.05).unwrap(),
        DistributionModel::worstcase_fq(1, 0.05).unwrap(),
        DistributionModel::power(&DistributionModel::worstcase_fq(2, 0.1).unwrap(), 0.02).unwrap(),
    ]
}

fn bdp_ratio_with_mc(d: &DistributionModel, n: usize, ell: usize, trials: u64) -> (f64, f64) {
    let v = bdp_value(d, n, 1).unwrap().value();
    let opt = opt_topl(d, n, ell, OptMethod::MonteCarlo { trials, seed: 11 }).unwrap();
    let r = v / (opt.value / ell as f64);
    (r, r * opt.se / opt.value)
}

#[test]
fn quantile_cdf_coherence() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in all_kinds() {
        for _ in 0..1000 {
            // u^20 stays above the subnormal range for the power kind
            let u: f64 = rng.gen_range(1e-6..1.0);
            let x = d.quantile(u);
            assert!(d.cdf(x) >= u - 1e-12, "{:?} u {u}: F({x}) = {}", d.spec(), d.cdf(x));
            // probes at or above the bottom of the support
            let y = (d.sample(&mut rng) * rng.gen_range(0.5..1.5)).max(d.quantile(0.0));
            assert!(d.quantile(d.cdf(y)) <= y + 1e-9 * (1.0 + y), "{:?} x {y}", d.spec());
            assert!(y < 0.0 || d.cdf(y) >= d.cdf(0.9 * y));
        }
        assert!(d.mean().is_finite() && d.mean() >= 0.0);
    }
}

#[test]
fn reward_curve_examples() {
    let u = uniform();
    assert!((reward_curve(&u, 1.0).unwrap() - 0.5).abs() < 1e-12);
    assert!((reward_curve(&u, 0.5).unwrap() - 0.375).abs() < 1e-12);
    for d in all_kinds() {
        assert_eq!(reward_curve(&d, 0.0).unwrap(), 0.0);
    }
    assert!(reward_curve(&u, 1.5).is_err());
}

#[test]
fn opt_examples() {
    let u = uniform();
    for m in [OptMethod::Quadrature, OptMethod::Survival] {
        assert!((opt_topl(&u, 9, 1, m).unwrap().value - 0.9).abs() < 1e-10);
        assert!((opt_topl(&u, 4, 4, m).unwrap().value - 2.0).abs() < 1e-12);
    }
    let e = expo();
    let quad = opt_topl(&e, 20, 3, OptMethod::Quadrature).unwrap().value;
    let surv = opt_topl(&e, 20, 3, OptMethod::Survival).unwrap().value;
    let mc = opt_topl(&e, 20, 3, OptMethod::MonteCarlo { trials: 200_000, seed: 3 }).unwrap();
    // E[X_(i)] for exponentials is the harmonic tail sum
    let exact: f64 = (1..=3).map(|i| (i..=20).map(|m| 1.0 / m as f64).sum::<f64>()).sum();
    assert!((quad - exact).abs() < 1e-9 && (surv - exact).abs() < 1e-9);
    assert!((mc.value - quad).abs() <= 3.0 * mc.se, "{} ± {} vs {quad}", mc.value, mc.se);
}

#[test]
fn bdp_examples() {
    let u = uniform();
    assert!((bdp_value(&u, 1, 1).unwrap().value() - 0.5).abs() < 1e-15);
    assert!((bdp_value(&u, 2, 1).unwrap().value() - 0.625).abs() < 1e-12);
    assert!((bdp_value(&u, 6, 6).unwrap().value() - 3.0).abs() < 1e-12);
    let a = DistributionModel::atoms(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    assert!((bdp_value(&a, 2, 1).unwrap().value() - 0.75).abs() < 1e-15);
    assert!(bdp_value(&u, 2, 3).is_err());
}

#[test]
fn simulation_is_reproducible() {
    let d = expo();
    let p = PolicySpec::QuantileAlg1 { partition: solve_partition(30, 2, 1e-12).unwrap() };
    let a = simulate_policy(&d, 30, 1, 2, &p, 10_000, 42).unwrap();
    let b = simulate_policy(&d, 30, 1, 2, &p, 10_000, 42).unwrap();
    assert_eq!(a, b);
    let c = simulate_policy(&d, 30, 1, 2, &p, 10_000, 43).unwrap();
    assert_ne!(a.mean_alg, c.mean_alg);
    assert!((a.ratio - a.mean_alg / a.mean_benchmark).abs() < 1e-15);
}

#[test]
fn constant_distribution_ratio_one() {
    let d = DistributionModel::atoms(vec![1.0], vec![1.0]).unwrap();
    let r = simulate_policy(&d, 8, 3, 3, &PolicySpec::BdpOptimal { k: 3 }, 500, 1).unwrap();
    assert_eq!(r.ratio, 1.0);
    assert_eq!(r.ratio_se, 0.0);
}

#[test]
fn expected_demand_threshold_single_selection() {
    let d = expo();
    let n = 1000;
    let t = d.quantile_upper(1.0 / n as f64);
    let p = PolicySpec::StaticThreshold { threshold: t, tie_prob: 1.0 };
    let r = simulate_policy(&d, n, 1, 1, &p, 50_000, 9).unwrap();
    assert!(r.ratio >= 1.0 - (-1.0f64).exp() - 5.0 / n as f64, "{}", r.ratio);
}

#[test]
fn worstcase_instance_shape() {
    for &(ell, q) in &[(1, 0.05), (2, 0.1), (3, 0.2)] {
        let w = build_worstcase_instance(ell, q, 500).unwrap();
        let traj = &w.trajectory;
        assert!((traj[0].1 - 1.0).abs() < 1e-12, "y(0) = {}", traj[0].1);
        assert!(traj.last().unwrap().2.abs() < 1e-9, "r(1) = {}", traj.last().unwrap().2);
        assert!(traj.windows(2).all(|p| p[1].1 <= p[0].1 && p[1].2 <= p[0].2 + 1e-12));
        assert!(w.h > w.r_q);
        assert!(w.p > 0.0 && w.p < 1.0);
        let cdf = &w.cdf_table;
        assert!(cdf.windows(2).all(|p| p[1].0 >= p[0].0 - 1e-12 && p[1].1 >= p[0].1));
        let tail = &cdf[cdf.len() - 2..];
        assert!((tail[0].0 - w.r_q).abs() < 1e-9 && (tail[0].1 - w.p).abs() < 1e-12);
        assert_eq!(tail[1], (w.h, 1.0));
        let d = DistributionModel::worstcase_fq(ell, q).unwrap();
        assert!((d.cdf_left(w.h) - w.p).abs() < 1e-9);
        assert_eq!(d.cdf(w.h), 1.0);
    }
    assert!(build_worstcase_instance(1, 0.0, 10).is_err());
    assert!(build_worstcase_instance(1, 1.0, 10).is_err());
}

#[test]
fn worstcase_ratio_near_limits() {
    let r1 = worstcase_bdp_ratio(1, 0.05, 5000).unwrap();
    assert!((r1.ratio - 0.745).abs() < 0.03, "{}", r1.ratio);
    let r2 = worstcase_bdp_ratio(2, 0.05, 5000).unwrap();
    assert!((r2.ratio - 0.966).abs() < 0.03, "{}", r2.ratio);
}

#[test]
fn doubling_keeps_support() {
    let d = DistributionModel::two_point(0.0, 3.0, 0.36).unwrap();
    let y = doubling_transform(&d).unwrap();
    assert!((y.cdf(0.0) - 0.8).abs() < 1e-15);
    assert_eq!(y.cdf(3.0), 1.0);
    assert_eq!(y.mass_at(1.5), 0.0);
}

#[test]
fn doubling_makes_instances_harder() {
    let atoms = DistributionModel::atoms(vec![0.1, 0.5, 1.0], vec![0.5, 0.3, 0.2]).unwrap();
    for d in [uniform(), atoms] {
        for n in [4, 5, 8] {
            for ell in [1, 2] {
                let (a, sa) = bdp_ratio_with_mc(&d, n, ell, 200_000);
                let (b, sb) = bdp_ratio_with_mc(&doubling_transform(&d).unwrap(), 2 * n, ell, 200_000);
                assert!(a >= b - 3.0 * (sa * sa + sb * sb).sqrt(), "{:?} n {n} ell {ell}: {a} vs {b}", d.spec());
            }
        }
    }
}

#[test]
fn doubled_order_statistic_dominates() {
    let (n, ell) = (6, 2);
    let d = expo();
    let y = doubling_transform(&d).unwrap();
    let trials = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut diff = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let mut ys: Vec<f64> = (0..2 * n).map(|_| y.sample(&mut rng)).collect();
        xs.sort_by(|a, b| b.total_cmp(a));
        ys.sort_by(|a, b| b.total_cmp(a));
        diff.push(ys[ell - 1] - xs[ell - 1]);
    }
    let m = diff.iter().sum::<f64>() / trials as f64;
    let var = diff.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (trials - 1) as f64;
    assert!(m >= -3.0 * (var / trials as f64).sqrt(), "{m}");
}

#[test]
fn json_models() {
    let d = DistributionModel::from_json(r#"{"kind":"worstcase_fq","ell":1,"q":0.05}"#).unwrap();
    assert!(d.worstcase().is_some());
    for bad in [
        r#"{"kind":"exponential","rate":-1}"#,
        r#"{"kind":"atoms","values":[1,2],"probs":[0.5]}"#,
        r#"{"kind":"atoms","values":[1,2],"probs":[0.5,0.6]}"#,
        r#"{"kind":"power","base":{"kind":"uniform","lo":0,"hi":1},"exponent":0}"#,
        r#"{"kind":"worstcase_fq","ell":1,"q":1.5}"#,
        r#"{"kind":"uniform","lo":0,"hi":1,"extra":1}"#,
        r#"{"kind":"uniform","lo":-1,"hi":1}"#,
    ] {
        assert!(DistributionModel::from_json(bad).is_err(), "{bad}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn bdp_values_monotone(n in 1usize..12, k in 1usize..4, rate in 0.2f64..5.0) {
        let k = k.min(n);
        let s = bdp_value(&DistributionModel::exponential(rate).unwrap(), n, k).unwrap();
        for i in 1..=n {
            for j in 1..=k {
                prop_assert!(s.values[i][j] >= s.values[i - 1][j] - 1e-12);
                prop_assert!(s.values[i][j] >= s.values[i][j - 1] - 1e-12);
            }
        }
    }

    #[test]
    fn reward_curve_increasing_and_concave(q in 0.01f64..0.98) {
        let d = expo();
        let a = reward_curve(&d, q).unwrap();
        let b = reward_curve(&d, q + 0.01).unwrap();
        let c = reward_curve(&d, q + 0.02).unwrap();
        prop_assert!(b > a);
        prop_assert!(b - a >= c - b - 1e-12);
    }

    #[test]
    fn opt_methods_agree(n in 2usize..40, ell in 1usize..5, lo in 0.0f64..1.0, width in 0.1f64..3.0) {
        let ell = ell.min(n);
        let d = DistributionModel::uniform(lo, lo + width).unwrap();
        let a = opt_topl(&d, n, ell, OptMethod::Quadrature).unwrap().value;
        let b = opt_topl(&d, n, ell, OptMethod::Survival).unwrap().value;
        let exact: f64 = (1..=ell).map(|i| lo + width * (n + 1 - i) as f64 / (n + 1) as f64).sum();
        prop_assert!((a - exact).abs() < 1e-9 && (b - exact).abs() < 1e-9);
    }
}
