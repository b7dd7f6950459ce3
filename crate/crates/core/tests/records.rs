use ramgaps::hazard::HazardModel;
use ramgaps::limitchain::LimitLaw;
use ramgaps::mc;
use ramgaps::records::*;
use ramgaps::stats::{chi_square_gof, chi_square_independence, EmpiricalDist};

/// p_0(j) = 1/(j(j+1)), with tails 1/i.
fn harmonic_law() -> InitialLaw {
    InitialLaw::from_fns(|j| 1.0 / (j * (j + 1)) as f64, |i| 1.0 / i as f64)
}

#[test]
fn record_kernels() {
    let half = InitialLaw::geometric(0.5).unwrap();
    for i in 1..30 {
        assert!((weak_record_transition(&half, i, i).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(strict_record_transition(&half, i, i).unwrap(), 0.0);
        assert_eq!(weak_record_transition(&half, i + 1, i).unwrap(), 0.0);
    }
    let p0 = harmonic_law();
    assert!((weak_record_transition(&p0, 1, 1).unwrap() - p0.pmf(1)).abs() < 1e-15);
    for i in 1..20 {
        let row: f64 = (i..100_000).map(|j| weak_record_transition(&p0, i, j).unwrap()).sum();
        // remaining tail is 1/100000 of mass relative to tail(i) = 1/i
        assert!((row + i as f64 / 100_000.0 - 1.0).abs() < 1e-10);
    }
    let point = InitialLaw::from_fns(|j| if j == 1 { 1.0 } else { 0.0 }, |i| if i <= 1 { 1.0 } else { 0.0 });
    assert!(strict_record_transition(&point, 1, 2).is_err());
}

#[test]
fn limit_chain_occupations() {
    let law = LimitLaw::new(&HazardModel::gem(1.0).unwrap()).unwrap();
    let spec = law.chain_spec();
    let h = spec.hitting_probabilities(30);
    let g = spec.solve_potential(30);
    for j in 1..=30u64 {
        let mu0j = 1.0 / (j + 1) as f64;
        let closed = (1.0 - mu0j) / j as f64;
        assert!((h[j as usize - 1] - closed).abs() < 1e-10);
        assert!((g[j as usize - 1] - 1.0 / j as f64).abs() < 1e-10);
        let occ = spec.occupation_law(j).unwrap();
        assert!((occ.stay - mu0j).abs() < 1e-14);
    }
}

#[test]
fn strict_records_visit_at_most_once() {
    let p0 = InitialLaw::geometric(0.3).unwrap();
    let spec = IncreasingChainSpec::strict_record(&p0);
    let h = spec.hitting_probabilities(10);
    assert!((h[0] - p0.pmf(1)).abs() < 1e-15);
    for j in 1..=10 {
        let occ = spec.occupation_law(j).unwrap();
        assert_eq!(occ.stay, 0.0);
        assert!((occ.pmf(1) + occ.pmf(0) - 1.0).abs() < 1e-15);
    }
    let paths = mc::run(61, 10_000, 2, |rng| simulate_record_chain(&p0, RecordFlavor::Strict, 1, 8, rng)).unwrap();
    assert!(paths.iter().all(|p| p.occupation.iter().all(|&g| g <= 1)));
}

#[test]
fn potentials_solve_their_equations() {
    let p0 = InitialLaw::geometric(0.3).unwrap();
    let gem2 = LimitLaw::new(&HazardModel::gem(2.0).unwrap()).unwrap();
    let beta = LimitLaw::new(&HazardModel::beta(2.0, 3.0).unwrap()).unwrap();
    let specs = [
        IncreasingChainSpec::weak_record(&p0),
        IncreasingChainSpec::strict_record(&p0),
        IncreasingChainSpec::weak_record(&harmonic_law()),
        gem2.chain_spec(),
        beta.chain_spec(),
    ];
    for spec in &specs {
        assert!(spec.potential_residual(50) < 1e-10);
        let h = spec.hitting_probabilities(50);
        let g = spec.solve_potential(50);
        for j in 1..=50u64 {
            let (hj, gj) = (h[j as usize - 1], g[j as usize - 1]);
            assert!(gj >= hj - 1e-15);
            assert!((gj - hj / (1.0 - spec.transition(j, j))).abs() < 1e-10);
        }
    }
}

#[test]
fn reconstruction_recovers_record_chains() {
    let p0 = InitialLaw::geometric(0.3).unwrap();
    let window = 40u64;
    let weak = IncreasingChainSpec::weak_record(&p0);
    let h = weak.hitting_probabilities(window);
    let as_weak = Reconstruction::new(h.clone(), h.clone()).unwrap();
    let as_strict = Reconstruction::new(h.clone(), vec![0.0; window as usize]).unwrap();
    assert!(as_weak.product_condition_holds(1e-5));
    for i in 1..=window {
        assert!((as_weak.initial(i).unwrap() - p0.pmf(i)).abs() < 1e-12);
        for j in i..=window {
            let a = as_weak.transition(i, j).unwrap();
            assert!((a - weak_record_transition(&p0, i, j).unwrap()).abs() < 1e-12);
            let b = as_strict.transition(i, j).unwrap();
            assert!((b - strict_record_transition(&p0, i, j).unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn reconstruction_recovers_gem_kernel() {
    for theta in [0.5, 1.0, 3.0] {
        let law = LimitLaw::new(&HazardModel::gem(theta).unwrap()).unwrap();
        let h: Vec<f64> = (1..=20).map(|j| theta / (j as f64 + theta)).collect();
        let r = Reconstruction::new(h.clone(), h).unwrap();
        for i in 1..=20 {
            for j in i..=20 {
                let a = r.transition(i, j).unwrap();
                assert!((a - law.transition_pmf(i, j)).abs() < 1e-10, "theta={theta} ({i},{j})");
            }
        }
    }
}

#[test]
fn bad_reconstruction_inputs() {
    assert!(Reconstruction::new(vec![], vec![]).is_err());
    assert!(Reconstruction::new(vec![0.5], vec![1.0]).is_err());
    assert!(Reconstruction::new(vec![0.0], vec![0.5]).is_err());
    let r = Reconstruction::new(vec![0.1; 5], vec![0.2; 5]).unwrap();
    assert!(!r.product_condition_holds(1e-3));
    assert!(r.transition(1, 6).is_err());
}

#[test]
fn weak_record_jumps_follow_strict_kernel() {
    let p0 = InitialLaw::geometric(0.3).unwrap();
    let i = 2u64;
    let (leaves, to) = mc::fold(
        62,
        200_000,
        4,
        || (0u64, vec![0u64; 8]),
        |acc, rng| {
            let p = simulate_record_chain(&p0, RecordFlavor::Weak, 1, 6, rng)?;
            for w in p.path.windows(2) {
                if w[0] == i && w[1] > i {
                    acc.0 += 1;
                    if w[1] < 8 {
                        acc.1[w[1] as usize] += 1;
                    }
                }
            }
            Ok(())
        },
        |a, b| {
            a.0 += b.0;
            a.1.iter_mut().zip(&b.1).for_each(|(x, y)| *x += y);
        },
    )
    .unwrap();
    for j in i + 1..8 {
        let p = strict_record_transition(&p0, i, j).unwrap();
        let est = to[j as usize] as f64 / leaves as f64;
        let se = (p * (1.0 - p) / leaves as f64).sqrt();
        assert!((est - p).abs() < 3.0 * se, "j={j}: {est} vs {p}");
    }
}

#[test]
fn weak_record_occupations() {
    let p0 = InitialLaw::geometric(0.3).unwrap();
    let spec = IncreasingChainSpec::weak_record(&p0);
    let paths = mc::run(63, 100_000, 4, |rng| simulate_record_chain(&p0, RecordFlavor::Weak, 1, 3, rng)).unwrap();
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        let joint: EmpiricalDist =
            paths.iter().map(|p| vec![p.occupation[a] as i64, p.occupation[b] as i64]).collect();
        let r = chi_square_independence(&joint).unwrap();
        assert!(r.pass, "G_{} vs G_{}: {r:?}", a + 1, b + 1);
    }

    for j in 1..=3u64 {
        let positive: EmpiricalDist = paths
            .iter()
            .map(|p| p.occupation[j as usize - 1])
            .filter(|&g| g >= 1)
            .map(|g| vec![g as i64])
            .collect();
        let stay = spec.transition(j, j);
        let exact: Vec<_> = (1..200).map(|k| (vec![k as i64], (1.0 - stay) * stay.powi(k - 1))).collect();
        let r = chi_square_gof(&positive, &exact).unwrap();
        assert!(r.pass, "j={j}: {r:?}");
    }
}
