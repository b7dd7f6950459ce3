use ramgaps::hazard::{ExtReal, HazardModel};
use ramgaps::limitchain::*;
use ramgaps::mc;
use ramgaps::stats::{chi_square_gof, EmpiricalDist, MeanAccumulator};

fn law(model: HazardModel) -> LimitLaw {
    LimitLaw::new(&model).unwrap()
}

fn gem(theta: f64) -> LimitLaw {
    law(HazardModel::gem(theta).unwrap())
}

#[test]
fn entrance_examples() {
    let g1 = gem(1.0);
    assert!((g1.entrance_pmf(2) - 1.0 / 6.0).abs() < 1e-15);
    for m in 1..50 {
        let oracle = 1.0 / (m * (m + 1)) as f64;
        assert!((g1.entrance_pmf(m) / oracle - 1.0).abs() < 1e-12);
    }

    let h = 0.35f64;
    let single = law(HazardModel::atoms(vec![h], vec![1.0]).unwrap());
    for m in 1..20u64 {
        let oracle = h.powi(m as i32) / (-(m as f64) * (1.0 - h).ln());
        assert!((single.entrance_pmf(m) / oracle - 1.0).abs() < 1e-12);
    }
}

#[test]
fn gem_two_entrance_normalizes() {
    let g2 = gem(2.0);
    let big_m = 1000u64;
    let sum: f64 = (1..=big_m).map(|m| g2.entrance_pmf(m)).sum();
    // the pmf is 4/(m(m+1)(m+2)), whose tail telescopes to 2/((M+1)(M+2))
    let tail = 2.0 / ((big_m + 1) * (big_m + 2)) as f64;
    assert!((sum + tail - 1.0).abs() < 1e-9);
    let bound = g2.entrance_tail_bound(big_m).finite().unwrap();
    assert!(1.0 - sum >= 0.0 && 1.0 - sum <= bound);
    assert!((g2.n0_tail(big_m) - tail).abs() < 1e-12);
}

#[test]
fn transition_examples() {
    let g1 = gem(1.0);
    assert!((g1.transition_pmf(1, 2) - 1.0 / 6.0).abs() < 1e-14);
    assert_eq!(g1.transition_pmf(3, 2), 0.0);
    let m = HazardModel::beta(2.0, 3.0).unwrap();
    let b = law(m.clone());
    for k in 1..=20 {
        assert!((b.transition_pmf(k, k) - m.mu(0, k)).abs() < 1e-14);
    }
    // Beta(2,3) rows have tails of order (m/N)^3
    for k in 1..=20 {
        let row: f64 = (k..=100_000).map(|n| b.transition_pmf(k, n)).sum();
        assert!((row - 1.0).abs() < 1e-9, "row {k}: {row}");
        assert!((row + b.transition_tail(k, 100_000) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fdd_reductions() {
    let g2 = gem(2.0);
    for m in 1..10 {
        assert!((g2.fdd_counts_pmf(&[m]).unwrap() - g2.entrance_pmf(m)).abs() < 1e-15);
    }
    assert_eq!(g2.fdd_counts_pmf(&[0, 3]).unwrap(), 0.0);
    assert!(g2.fdd_counts_pmf(&[]).is_err());
}

#[test]
fn fdd_marginalizes() {
    let g1 = gem(1.0);
    let big_n = 100_000u64;
    for n0 in 1..=5u64 {
        let head: f64 = (0..=big_n).map(|n1| g1.fdd_counts_pmf(&[n0, n1]).unwrap()).sum();
        let tail = g1.entrance_pmf(n0) * g1.transition_tail(n0, n0 + big_n);
        assert!((head + tail - g1.entrance_pmf(n0)).abs() < 1e-9, "n0={n0}");
    }
}

#[test]
fn fdd_factorizes_through_q() {
    let g2 = gem(2.0);
    let mut checked = 0;
    for n0 in 1..=6u64 {
        for n1 in 0..=6 - n0 {
            for n2 in 0..=6 - n0 - n1 {
                let direct = g2.fdd_counts_pmf(&[n0, n1, n2]).unwrap();
                let (q0, q1, q2) = (n0, n0 + n1, n0 + n1 + n2);
                let chain = g2.entrance_pmf(q0) * g2.transition_pmf(q0, q1) * g2.transition_pmf(q1, q2);
                assert!((direct - chain).abs() < 1e-12);
                assert!((direct - g2.fdd_by_factorization(&[n0, n1, n2]).unwrap()).abs() < 1e-12);
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 56);
}

#[test]
fn gap_laws() {
    for theta in [0.5, 1.0, 3.0] {
        let g = gem(theta);
        for j in 1..=6u64 {
            let r = theta / (j as f64 + theta);
            assert!((g.hitting(j).unwrap() - r).abs() < 1e-14);
            for k in 1..=5u64 {
                assert!((g.gap_tail(j, k).unwrap() - r.powi(k as i32)).abs() < 1e-14);
            }
        }
    }
    assert!((gem(2.0).mean_gap(3).unwrap() - 2.0 / 3.0).abs() < 1e-15);

    let m = HazardModel::beta(2.0, 3.0).unwrap();
    let b = law(m.clone());
    let c = b.mean_gap(1).unwrap();
    for j in 1..=8u64 {
        assert!((b.mean_gap(j).unwrap() * j as f64 - c).abs() < 1e-14);
        for k in 1..=4 {
            let ratio = b.gap_tail(j, k + 1).unwrap() / b.gap_tail(j, k).unwrap();
            assert!((ratio - m.mu(0, j)).abs() < 1e-14);
        }
    }
    assert!(b.gap_tail(0, 1).is_err());
}

#[test]
fn mean_q_values() {
    assert_eq!(gem(0.5).mean_q(0), ExtReal::Infinite);
    assert_eq!(gem(1.0).mean_q(3), ExtReal::Infinite);
    assert!((gem(3.0).mean_q(2).finite().unwrap() - 3.375).abs() < 1e-12);

    let g2 = gem(2.0);
    let big_m = 1_000_000u64;
    let head: f64 = (1..=big_m).map(|m| m as f64 * g2.entrance_pmf(m)).sum();
    // m * 4/(m(m+1)(m+2)) telescopes to a tail of 4/(M+2)
    let total = head + 4.0 / (big_m + 2) as f64;
    assert!((total - 2.0).abs() < 1e-9);
    assert!((g2.mean_q(0).finite().unwrap() - total).abs() < 1e-9);
}

#[test]
fn n0_tails() {
    assert!((n0_tail_gem(1.0, 1) - 0.5).abs() < 1e-15);
    for theta in [0.5, 1.0, 2.0, 5.0] {
        let g = gem(theta);
        assert_eq!(g.n0_tail_integral(0), 1.0);
        for k in 1..=10 {
            let a = g.n0_tail_integral(k);
            assert!((a - n0_tail_gem(theta, k)).abs() < 1e-8, "theta={theta} k={k}");
        }
    }
}

#[test]
fn small_count_means() {
    for theta in [0.5, 2.0] {
        let g = gem(theta);
        for j in 1..=5u64 {
            let v = g.mean_small_count(j).finite().unwrap();
            assert!((v - theta / j as f64).abs() < 1e-14);
        }
    }
    assert!((gem(1.0).mean_small_count(0).finite().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn recursion_checks() {
    assert!(gem_recursion_check(1.0, 30).unwrap() < 1e-10);
    assert!(theta_msum_residual(5.0, 1).unwrap() < 1e-15);
    let beta = rec_residuals(&HazardModel::beta(2.0, 3.0).unwrap(), 10).unwrap();
    assert!(beta.iter().any(|&r| r > 1e-3), "{beta:?}");
}

#[test]
fn hitting_from_last_exit_equations() {
    for model in [HazardModel::gem(1.0).unwrap(), HazardModel::gem(2.5).unwrap(), HazardModel::beta(2.0, 3.0).unwrap()] {
        assert!(law(model).hitting_self_consistency(30) < 1e-10);
    }
}

#[test]
fn one_ball_entrance_gives_mixed_geometric_increment() {
    let model = HazardModel::gem(1.0).unwrap();
    let g1 = law(model.clone());
    let paths = mc::run(31, 100_000, 4, |rng| g1.simulate_chain(1, 0, rng)).unwrap();
    let after_one: Vec<u64> = paths.iter().filter(|p| p.n[0] == 1).map(|p| p.n[1]).collect();
    let r = after_one.len() as f64;
    for k in 1..=5u64 {
        let p = model.mu(k, 0);
        let phat = after_one.iter().filter(|&&x| x >= k).count() as f64 / r;
        let se = (p * (1.0 - p) / r).sqrt();
        assert!((phat - p).abs() < 3.0 * se, "k={k}: {phat} vs {p}");
    }
}

#[test]
fn first_two_counts_match_fdd() {
    let g2 = gem(2.0);
    let emp: EmpiricalDist = mc::run(32, 100_000, 4, |rng| g2.simulate_chain(1, 0, rng))
        .unwrap()
        .into_iter()
        .map(|p| vec![p.n[0] as i64, p.n[1] as i64])
        .collect();
    let mut exact = Vec::new();
    for n0 in 1..=300u64 {
        for n1 in 0..=300 - n0 {
            exact.push((vec![n0 as i64, n1 as i64], g2.fdd_counts_pmf(&[n0, n1]).unwrap()));
        }
    }
    let r = chi_square_gof(&emp, &exact).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn simulated_occupations_match_mean_gap() {
    let model = HazardModel::beta(2.0, 3.0).unwrap();
    let b = law(model);
    let accs = mc::fold(
        33,
        100_000,
        4,
        || vec![MeanAccumulator::default(); 5],
        |a, rng| {
            let p = b.simulate_chain(1, 5, rng)?;
            for (acc, &g) in a.iter_mut().zip(&p.g) {
                acc.push(g as f64);
            }
            Ok(())
        },
        |a, other| a.iter_mut().zip(&other).for_each(|(x, y)| x.merge(y)),
    )
    .unwrap();
    for (j, acc) in (1..).zip(&accs) {
        let (mean, half) = acc.ci(0.99).unwrap();
        let target = b.mean_gap(j).unwrap();
        assert!((mean - target).abs() <= half, "j={j}: {mean} ± {half} vs {target}");
    }
}

#[test]
fn simulated_small_counts() {
    let g2 = gem(2.0);
    let accs = mc::fold(
        34,
        100_000,
        4,
        || vec![MeanAccumulator::default(); 5],
        |a, rng| {
            let t = g2.small_count_tallies(4, 1_000_000, rng)?;
            for (acc, &k) in a.iter_mut().zip(&t) {
                acc.push(k as f64);
            }
            Ok(())
        },
        |a, other| a.iter_mut().zip(&other).for_each(|(x, y)| x.merge(y)),
    )
    .unwrap();
    for j in 1..=4u64 {
        let (mean, half) = accs[j as usize].ci(0.99).unwrap();
        let target = 2.0 / j as f64;
        assert!((mean - target).abs() <= half, "K_{j}: {mean} ± {half} vs {target}");
    }
}
