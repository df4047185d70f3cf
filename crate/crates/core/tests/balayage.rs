use prophet_core::balayage::*;
use prophet_core::simkit::{bdp_value, opt_topl, OptMethod};
use proptest::prelude::*;

/// Found by random search: sweeping the gap set from the top down changes the value.
const ORDER_COUNTEREXAMPLE: [(f64, f64); 5] = [
    (0.21104469268591686, 0.44727728892333735),
    (0.386841610678602, 0.05400521008846963),
    (0.8324553904168597, 0.131724425234969),
    (0.9136066642319063, 0.04562618912151725),
    (0.9845971119130229, 0.32136688663170676),
];

fn dist(atoms: &[(f64, f64)]) -> DiscreteDistribution {
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    DiscreteDistribution::new(atoms.iter().map(|a| a.0).collect(), atoms.iter().map(|a| a.1 / total).collect()).unwrap()
}

fn small_dist(max_atoms: usize) -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec((0.0f64..=1.0, 0.05f64..1.0), 1..=max_atoms).prop_map(|a| dist(&a))
}

fn instance() -> impl Strategy<Value = (DiscreteDistribution, usize, usize)> {
    (small_dist(6), 2usize..=6, 1usize..=3).prop_map(|(d, n, k)| (d, n, k.min(n)))
}

#[test]
fn fixed_points() {
    let d = DiscreteDistribution::new(vec![0.5], vec![1.0]).unwrap();
    let b = balayage_op(&d, 0.2, 0.8).unwrap();
    let split = b.atoms();
    assert_eq!(split.len(), 2);
    assert!((split[0].0 - 0.2).abs() < 1e-15 && (split[1].0 - 0.8).abs() < 1e-15);
    assert!((split[0].1 - 0.5).abs() < 1e-15 && (split[1].1 - 0.5).abs() < 1e-15);
    let out = balayage_op(&d, 0.6, 0.9).unwrap();
    assert_eq!(out, d);
    let bern = DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    assert_eq!(balayage_op(&bern, 0.0, 1.0).unwrap(), bern);
    assert!(balayage_op(&bern, 0.5, 0.5).is_err());

    let t = bdp_table(&bern, 2, 1).unwrap();
    let reduced = reduce_instance(&bern, 2, 1).unwrap();
    assert_eq!(reduced.reduced, bern);
    assert!((t.value() - 0.75).abs() < 1e-15);
    assert!((brute_force_opt(&bern, 2, 1).unwrap() - 0.75).abs() < 1e-15);
}

#[test]
fn first_row_is_the_mean() {
    let d = dist(&[(0.1, 1.0), (0.6, 2.0), (0.9, 0.5)]);
    let t = bdp_table(&d, 4, 3).unwrap();
    for j in 1..=3 {
        assert!((t.v[1][j] - d.mean()).abs() < 1e-15);
    }
    let c = DiscreteDistribution::new(vec![0.4], vec![1.0]).unwrap();
    assert!((brute_force_opt(&c, 5, 3).unwrap() - 1.2).abs() < 1e-14);
}

#[test]
fn table_agrees_with_model_dynamic_program() {
    let d = dist(&[(0.0, 0.3), (0.25, 0.2), (0.7, 0.4), (1.0, 0.1)]);
    let t = bdp_table(&d, 7, 3).unwrap();
    let m = bdp_value(&d.to_model().unwrap(), 7, 3).unwrap();
    assert!((t.value() - m.value()).abs() < 1e-14);
}

#[test]
fn decreasing_sweep_changes_value() {
    let d = dist(&ORDER_COUNTEREXAMPLE);
    let (n, k) = (6, 2);
    let r = reduce_instance(&d, n, k).unwrap();
    assert!((r.value_before - r.value_after).abs() < 1e-10);
    let wrong = balayage_sweep(&d, &r.points, SweepOrder::Decreasing).unwrap();
    let v = bdp_table(&wrong, n, k).unwrap().value();
    assert!((v - r.value_before).abs() > 0.1, "{v} vs {}", r.value_before);
}

#[test]
fn size_limits() {
    assert_eq!(support_bound(5, 2), 2 + 1 + 6);
    let d = dist(&(0..40).map(|i| (i as f64 / 40.0, 1.0)).collect::<Vec<_>>());
    assert!(brute_force_opt(&d, 6, 1).is_err());
    let wide = DiscreteDistribution::new(vec![0.5, 2.0], vec![0.5, 0.5]).unwrap();
    assert!(reduce_instance(&wide, 3, 1).is_err());
    assert!(DiscreteDistribution::new(vec![0.1, 0.2], vec![0.5, 0.6]).is_err());
    assert!(DiscreteDistribution::new(vec![-0.1], vec![1.0]).is_err());
}

#[test]
fn brute_force_matches_monte_carlo() {
    let d = dist(&[(0.15, 0.5), (0.55, 0.3), (0.95, 0.2)]);
    let model = d.to_model().unwrap();
    for ell in 1..=3 {
        let exact = brute_force_opt(&d, 4, ell).unwrap();
        let mc = opt_topl(&model, 4, ell, OptMethod::MonteCarlo { trials: 200_000, seed: 5 }).unwrap();
        assert!((mc.value - exact).abs() <= 3.0 * mc.se, "ell {ell}: {} ± {} vs {exact}", mc.value, mc.se);
        let quad = opt_topl(&model, 4, ell, OptMethod::Survival).unwrap().value;
        assert!((quad - exact).abs() < 1e-12);
    }
}

#[test]
fn ten_atom_reduction() {
    let atoms: Vec<(f64, f64)> = (0..10).map(|i| ((i as f64 * 0.37).fract(), 1.0 + i as f64)).collect();
    let d = dist(&atoms);
    let r = reduce_instance(&d, 5, 2).unwrap();
    assert!((r.value_before - r.value_after).abs() < 1e-12);
    for ell in 1..=2 {
        assert!(brute_force_opt(&r.reduced, 5, ell).unwrap() >= brute_force_opt(&d, 5, ell).unwrap() - 1e-12);
    }
    assert!(r.reduced.len() <= support_bound(5, 2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn balayage_preserves_mean_and_raises_opt(d in small_dist(6), a in 0.0f64..1.0, w in 0.01f64..1.0, n in 2usize..=6, ell in 1usize..=3) {
        let b = (a + w).min(1.0);
        prop_assume!(b > a);
        let out = balayage_op(&d, a, b).unwrap();
        prop_assert!((out.mean() - d.mean()).abs() <= 1e-14);
        let ell = ell.min(n);
        prop_assert!(brute_force_opt(&out, n, ell).unwrap() >= brute_force_opt(&d, n, ell).unwrap() - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sweep_preserves_value((d, n, k) in instance()) {
        let r = reduce_instance(&d, n, k).unwrap();
        prop_assert!((r.value_before - r.value_after).abs() <= 1e-10);
        prop_assert!(r.reduced.len() <= support_bound(n, k));
        prop_assert!((r.reduced.mean() - d.mean()).abs() <= 1e-12);
        for ell in 1..=k {
            prop_assert!(brute_force_opt(&r.reduced, n, ell).unwrap() >= brute_force_opt(&d, n, ell).unwrap() - 1e-12);
        }
    }

    #[test]
    fn gaps_are_monotone(d in small_dist(6), n in 1usize..=8, k in 1usize..=3) {
        let k = k.min(n);
        let t = bdp_table(&d, n, k).unwrap();
        prop_assert!(t.is_monotone(1e-12));
    }
}
