use prophet_core::bvp::*;
use prophet_core::crsolver::solve_cr_ell;
use prophet_core::simkit::{simulate_policy, DistributionModel, PolicySpec};
use proptest::prelude::*;

#[test]
fn recurrence_examples() {
    assert!((step_recurrence(0.5, 0.5, 2, 1).unwrap() - 0.875).abs() < 1e-14);
    for &(n, ell) in &[(10, 1), (40, 3), (200, 2)] {
        assert!((step_recurrence(0.0, 0.123, n, ell).unwrap() - 0.123).abs() < 1e-15);
        let b1 = (ell as f64 + 1.0) / n as f64;
        let mut b = b1;
        while b <= 1.0 {
            let next = step_recurrence(b, b1, n, ell).unwrap();
            assert!(next - b >= 1.0 / n as f64 - 1e-15, "n {n} ell {ell} b {b}");
            b = next;
        }
    }
}

#[test]
fn single_item_takes_it() {
    let s = solve_partition(1, 1, 1e-12).unwrap();
    assert_eq!(s.b, vec![0.0, 1.0]);
    assert_eq!(s.c_ell_n, 1.0);
    assert_eq!(s.ratio_bound(), 1.0);
    let s = solve_partition(3, 3, 1e-12).unwrap();
    assert!(s.ratio_bound() <= 1.0);
}

#[test]
fn two_items_closed_form() {
    let s = solve_partition(2, 1, 1e-13).unwrap();
    let b1 = 2.0 - 2f64.sqrt();
    assert!((s.b[1] - b1).abs() < 1e-12);
    assert!((s.c_ell_n - (4.0 - 2.0 * 2f64.sqrt())).abs() < 1e-10);
    assert!((s.ratio_bound() - 0.8535534).abs() < 1e-7);
    let cert = certify_equalization(&s).unwrap();
    for r in &cert.rho {
        assert!((r - 1.0 / b1).abs() < 1e-10);
    }
}

#[test]
fn certificate_detects_perturbation() {
    let s = solve_partition(50, 2, 1e-12).unwrap();
    let cert = certify_equalization(&s).unwrap();
    assert!(cert.max_spread <= 1e-8, "{}", cert.max_spread);
    assert!(cert.alpha.iter().zip(&cert.a).all(|(al, a)| *al > 0.0 && *a > 0.0 && a < al));
    let mut eps = s.eps.clone();
    eps[20] += 1e-3;
    let bent = PartitionSolution::from_eps(50, 2, eps).unwrap();
    assert!(certify_equalization(&bent).unwrap().max_spread > 1e-5);
}

#[test]
fn large_n_approaches_limit() {
    let s = solve_partition(10_000, 1, 1e-12).unwrap();
    assert!((s.ratio_bound() - 0.745).abs() < 2e-3);
}

#[test]
fn finite_n_gap_shrinks() {
    for ell in 1..=3 {
        let limit = solve_cr_ell(ell as u32, 1e-12).unwrap().cr;
        let gaps: Vec<f64> = [100, 1000, 10_000, 100_000]
            .iter()
            .map(|&n| (solve_partition(n, ell, 1e-12).unwrap().ratio_bound() - limit).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "ell {ell}: {gaps:?}");
    }
}

#[test]
fn equalized_partition_matches_simulation() {
    let d = DistributionModel::uniform(0.0, 1.0).unwrap();
    let s = solve_partition(20, 1, 1e-12).unwrap();
    let target = s.ratio_bound();
    let rep = simulate_policy(&d, 20, 1, 1, &PolicySpec::QuantileAlg1 { partition: s }, 200_000, 7).unwrap();
    assert!((rep.ratio - target).abs() <= 3.0 * rep.ratio_se, "{} vs {target}", rep.ratio);
}

#[test]
fn sandwich_for_unequal_partitions() {
    let d = DistributionModel::exponential(1.0).unwrap();
    let (n, ell) = (12, 2);
    for skew in [1.0, 2.0, 0.5] {
        let eps: Vec<f64> = (0..=n).map(|i| (i as f64 / n as f64).powf(skew)).collect();
        let p = PartitionSolution::from_eps(n, ell, eps).unwrap();
        let cert = certify_equalization(&p).unwrap();
        let scale = ell as f64 / n as f64;
        let lo = cert.rho.iter().cloned().fold(f64::INFINITY, f64::min) * scale;
        let hi = cert.rho.iter().cloned().fold(0.0, f64::max) * scale;
        let rep = simulate_policy(&d, n, 1, ell, &PolicySpec::QuantileAlg1 { partition: p }, 100_000, 3).unwrap();
        let slack = 3.0 * rep.ratio_se;
        assert!(rep.ratio >= lo - slack && rep.ratio <= hi + slack, "skew {skew}: {} not in [{lo}, {hi}]", rep.ratio);
    }
}

#[test]
fn rejects_bad_shapes() {
    assert!(solve_partition(3, 5, 1e-12).is_err());
    assert!(solve_partition(10, 0, 1e-12).is_err());
    assert!(PartitionSolution::from_eps(3, 1, vec![0.0, 0.5, 0.4, 1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn solved_partitions_are_valid(ell in 1usize..=5, extra in 0usize..3000) {
        let n = ell + extra;
        let s = solve_partition(n, ell, 1e-12).unwrap();
        prop_assert!(s.c_ell_n >= ell as f64 && s.c_ell_n <= ell as f64 + 1.0);
        prop_assert!(s.residual <= 1e-9);
        prop_assert_eq!(s.b[0], 0.0);
        prop_assert_eq!(s.eps[0], 0.0);
        prop_assert_eq!(s.eps[n], 1.0);
        if n > ell {
            prop_assert!(s.b.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(s.eps.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(certify_equalization(&s).unwrap().max_spread <= 1e-8);
        }
    }

    #[test]
    fn shooting_is_monotone(ell in 1usize..=4, extra in 1usize..400) {
        let n = ell + extra;
        let (lo, hi) = (ell as f64 / n as f64, (ell as f64 + 1.0) / n as f64);
        let ends: Vec<f64> = (0..20)
            .map(|i| shoot(n, ell, lo + (hi - lo) * i as f64 / 19.0).unwrap())
            .collect();
        // shots stop as soon as they pass 1, so only the crossing side is ordered
        let first_over = ends.iter().position(|&e| e > 1.0).unwrap_or(ends.len());
        prop_assert!(ends[..first_over].windows(2).all(|w| w[1] > w[0]));
        prop_assert!(ends[first_over..].iter().all(|&e| e > 1.0));
    }
}
