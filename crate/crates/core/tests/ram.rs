use proptest::prelude::*;
use ramgaps::hazard::HazardModel;
use ramgaps::limitchain::LimitLaw;
use ramgaps::mc;
use ramgaps::ram::*;
use ramgaps::stats::{chi_square_gof, chi_square_two_sample, EmpiricalDist};

fn gem(theta: f64) -> HazardModel {
    HazardModel::gem(theta).unwrap()
}

#[test]
fn single_ball_in_half_atom_is_geometric() {
    let m = HazardModel::atoms(vec![0.5], vec![1.0]).unwrap();
    let emp: EmpiricalDist = mc::run(21, 1_000_000, 4, |rng| sample_configuration(&m, 1, rng))
        .unwrap()
        .into_iter()
        .map(|c| vec![c.m_max() as i64])
        .collect();
    for k in 1..=6 {
        let p = 0.5f64.powi(k as i32);
        let phat = emp.count(&[k]) as f64 / emp.total() as f64;
        let se = (p * (1.0 - p) / emp.total() as f64).sqrt();
        assert!((phat - p).abs() < 3.0 * se, "k={k}: {phat} vs {p}");
    }
    let exact: Vec<_> = (1..60).map(|k| (vec![k], 0.5f64.powi(k as i32))).collect();
    assert!(chi_square_gof(&emp, &exact).unwrap().pass);
}

#[test]
fn section_example_codec() {
    assert_eq!(gaps_from_counts(&[2, 0, 1, 2, 0, 3], 8).unwrap(), vec![0, 0, 2, 0, 1, 2, 0, 0]);
    assert_eq!(counts_from_gaps(&[0, 0, 2, 0, 1, 2, 0, 0], 8).unwrap(), vec![2, 0, 1, 2, 0, 3]);
    assert_eq!(gaps_from_counts(&[0, 0, 0, 2, 0, 3, 0, 2, 1], 8).unwrap(), vec![1, 0, 2, 0, 0, 2, 0, 3]);
    assert_eq!(counts_from_gaps(&[1, 0, 2, 0, 0, 2, 0, 3], 8).unwrap(), vec![0, 0, 0, 2, 0, 3, 0, 2, 1]);
    assert_eq!(gaps_from_counts(&[7], 7).unwrap(), vec![0; 7]);
    assert!(gaps_from_counts(&[2, 0], 2).is_err());
    assert!(counts_from_gaps(&[0, 0], 3).is_err());
}

#[test]
fn section_example_statistics() {
    let c = Configuration::from_counts(vec![2, 0, 1, 2, 0, 3]).unwrap();
    let s = c.statistics(3);
    assert_eq!((s.l_n, s.k0, s.k[0]), (3, 2, 1));
    assert_eq!(l_n_from_gaps(&c.gaps), 3);
    assert_eq!(k0_from_gaps(&c.gaps), 2);
    let all = Configuration::from_counts(vec![5]).unwrap().statistics(2);
    assert_eq!((all.l_n, all.k0), (5, 0));
}

#[test]
fn exact_probability_examples() {
    let p = exact_config_probability(&gem(1.0), &[0, 0, 1]).unwrap();
    assert!((p - 0.125).abs() < 1e-15);

    let b = HazardModel::beta(2.0, 3.0).unwrap();
    let p = exact_config_probability(&b, &[4]).unwrap();
    assert!((p - b.mu(4, 0)).abs() < 1e-15);

    // brute force over the atoms drawn for boxes 1 and 2
    let atoms = [(0.3, 0.5), (0.7, 0.5)];
    let mut brute = 0.0;
    for &(h1, w1) in &atoms {
        for &(h2, w2) in &atoms {
            brute += w1 * w2 * 2.0 * h1 * (1.0 - h1) * h2;
        }
    }
    let m = HazardModel::atoms(vec![0.3, 0.7], vec![0.5, 0.5]).unwrap();
    let p = exact_config_probability(&m, &[1, 1]).unwrap();
    assert!((p - brute).abs() < 1e-15);
    assert!((p - 2.0 * m.mu(1, 1) * m.mu(1, 0)).abs() < 1e-15);
}

/// All count vectors with sum n and at most m_max boxes.
fn configurations(n: u64, m_max: usize) -> Vec<Vec<u64>> {
    fn rec(left: u64, boxes: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        if boxes == 0 {
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, boxes - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, m_max, &mut Vec::new(), &mut out);
    out
}

#[test]
fn exact_law_sums_to_one_for_small_n() {
    let m = HazardModel::atoms(vec![0.3, 0.7], vec![0.5, 0.5]).unwrap();
    for n in 1..=3 {
        let total: f64 = configurations(n, 40).iter().map(|c| exact_config_probability(&m, c).unwrap()).sum();
        // the chance that some ball passes 40 boxes is below n * 0.85^40
        assert!((1.0 - total) >= -1e-12 && 1.0 - total < n as f64 * 0.85f64.powi(40), "n={n}: {total}");
    }
}

#[test]
fn exact_law_matches_simulation() {
    let m = HazardModel::atoms(vec![0.3, 0.7], vec![0.5, 0.5]).unwrap();
    let emp: EmpiricalDist = mc::run(22, 200_000, 4, |rng| sample_configuration(&m, 3, rng))
        .unwrap()
        .into_iter()
        .map(|c| c.counts.iter().map(|&x| x as i64).collect())
        .collect();
    let exact: Vec<_> = configurations(3, 30)
        .into_iter()
        .map(|c| {
            let p = exact_config_probability(&m, &c).unwrap();
            (c.into_iter().map(|x| x as i64).collect(), p)
        })
        .collect();
    let r = chi_square_gof(&emp, &exact).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn qstar_examples() {
    let g1 = gem(1.0);
    assert!((qstar_transition(&g1, 2, 1).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    for model in [g1.clone(), HazardModel::beta(2.0, 3.0).unwrap(), HazardModel::atoms(vec![0.2], vec![1.0]).unwrap()] {
        for l in 1..=20 {
            assert!((qstar_transition(&model, l, l).unwrap() - model.mu(0, l)).abs() < 1e-14);
            let row: f64 = (0..=l).map(|m| qstar_transition(&model, l, m).unwrap()).sum();
            assert!((row - 1.0).abs() < 1e-12);
            let dec: f64 = (0..l).map(|m| decrement_transition(&model, l, m).unwrap()).sum();
            assert!((dec - 1.0).abs() < 1e-12);
        }
    }
    assert!(qstar_transition(&g1, 2, 3).is_err());
}

#[test]
fn potential_examples() {
    let g1 = gem(1.0);
    assert!((finite_potential(&g1, 1, 1).unwrap() - 2.0).abs() < 1e-14);
    let b = HazardModel::beta(2.0, 3.0).unwrap();
    for n in [1, 7, 40] {
        let g = finite_potential(&b, n, n).unwrap();
        assert!((g - 1.0 / (1.0 - b.mu(0, n))).abs() < 1e-12);
    }
    let big = finite_potential(&g1, 10_000, 1).unwrap();
    assert!((big - 1.0).abs() < 0.05, "{big}");
}

#[test]
fn fast_and_reference_potentials_agree() {
    for model in [gem(0.5), HazardModel::beta(2.0, 3.0).unwrap(), HazardModel::atoms(vec![0.3, 0.6], vec![0.4, 0.6]).unwrap()] {
        let fast = FinitePotential::new(&model, 300).unwrap();
        let slow = FinitePotential::new_reference(&model, 300).unwrap();
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() <= 1e-10 * b.abs(), "{a} vs {b}");
        }
    }
}

#[test]
fn reversed_rows_are_stochastic() {
    for model in [gem(1.0), HazardModel::beta(2.0, 3.0).unwrap()] {
        let n = 30;
        let p = FinitePotential::new(&model, n).unwrap();
        let init: f64 = (1..=n).map(|m| p.initial_pmf(m).unwrap()).sum();
        assert!((init - 1.0).abs() < 1e-10);
        for l in 1..=n {
            let row: f64 = (l..=n).map(|m| p.reversed_transition(l, m).unwrap()).sum();
            assert!(row <= 1.0 + 1e-10);
            assert!((row + p.absorption(l).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn reversed_chain_approaches_limit() {
    let model = HazardModel::beta(2.0, 3.0).unwrap();
    let p = FinitePotential::new(&model, 10_000).unwrap();
    let law = LimitLaw::new(&model).unwrap();
    for l in 1..=4 {
        for m in l..=l + 6 {
            let a = p.reversed_transition(l, m).unwrap();
            let b = law.transition_pmf(l, m);
            assert!((a / b - 1.0).abs() < 0.01, "({l},{m}): {a} vs {b}");
        }
    }
}

#[test]
fn reversed_chain_matches_simulation() {
    let model = gem(1.0);
    let n = 5;
    let (visits, moves) = mc::fold(
        23,
        1_000_000,
        4,
        || (0u64, [0u64; 6]),
        |acc, rng| {
            let c = sample_configuration(&model, n, rng)?;
            for w in c.reversed_tail_counts.windows(2) {
                if w[0] == 1 {
                    acc.0 += 1;
                    acc.1[w[1] as usize] += 1;
                }
            }
            Ok(())
        },
        |a, b| {
            a.0 += b.0;
            for i in 0..6 {
                a.1[i] += b.1[i];
            }
        },
    )
    .unwrap();
    let p = FinitePotential::new(&model, n).unwrap();
    for m in 1..=n {
        let q = p.reversed_transition(1, m).unwrap();
        let est = moves[m as usize] as f64 / visits as f64;
        let se = (q * (1.0 - q) / visits as f64).sqrt();
        assert!((est - q).abs() < 3.0 * se, "m={m}: {est} vs {q}");
    }
}

#[test]
fn tail_count_chain_matches_configurations() {
    let model = HazardModel::beta(2.0, 3.0).unwrap();
    let n = 100;
    let key = |path: &[u64]| -> Vec<i64> { path.iter().skip(1).take(3).map(|&x| x as i64).collect() };
    let direct: EmpiricalDist =
        mc::run(24, 100_000, 4, |rng| Ok(key(&simulate_tail_count_chain(&model, n, rng)?))).unwrap().into_iter().collect();
    let from_config: EmpiricalDist = mc::run(25, 100_000, 4, |rng| Ok(key(&sample_configuration(&model, n, rng)?.tail_counts())))
        .unwrap()
        .into_iter()
        .collect();
    let r = chi_square_two_sample(&direct, &from_config).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn top_down_sampler_matches_configurations() {
    let model = gem(2.0);
    let n = 200;
    let top = |r: &[u64]| -> Vec<i64> { r.iter().take(3).map(|&x| x as i64).collect() };
    let fast: EmpiricalDist =
        mc::run(26, 100_000, 4, |rng| Ok(top(&sample_reversed_tail_counts(&model, n, 2, rng)?))).unwrap().into_iter().collect();
    let full: EmpiricalDist = mc::run(27, 100_000, 4, |rng| {
        let c = sample_configuration(&model, n, rng)?;
        let mut r = c.reversed_tail_counts.clone();
        r.resize(3.max(r.len()), n);
        Ok(top(&r))
    })
    .unwrap()
    .into_iter()
    .collect();
    let r = chi_square_two_sample(&fast, &full).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn conservation() {
    let model = HazardModel::beta(0.5, 1.5).unwrap();
    let configs = mc::run(28, 2000, 1, |rng| sample_configuration(&model, 50, rng)).unwrap();
    for c in configs {
        assert_eq!(c.counts.iter().sum::<u64>(), 50);
        assert_eq!(*c.reversed_tail_counts.last().unwrap(), 50);
        assert_eq!(c.tail_counts()[0], 50);
    }
}

fn counts_strategy() -> impl Strategy<Value = Vec<u64>> {
    (prop::collection::vec(0u64..4, 0..12), 1u64..5).prop_map(|(mut v, last)| {
        v.push(last);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn counts_gaps_round_trip(counts in counts_strategy()) {
        let n = counts.iter().sum();
        let gaps = gaps_from_counts(&counts, n).unwrap();
        prop_assert_eq!(gaps.len() as u64, n);
        prop_assert_eq!(counts_from_gaps(&gaps, n).unwrap(), counts.clone());
        let r = reversed_tail_counts(&counts);
        prop_assert_eq!(*r.last().unwrap(), n);
        prop_assert!(r.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn both_readings_of_small_counts_agree(counts in counts_strategy()) {
        let c = Configuration::from_counts(counts).unwrap();
        let s = c.statistics(4);
        prop_assert_eq!(l_n_from_gaps(&c.gaps), s.l_n);
        prop_assert_eq!(k0_from_gaps(&c.gaps), s.k0);
    }
}
