use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1};

use crate::error::{invalid_arg, Error, Result};
use crate::hazard::{open01, HazardModel};

use super::Configuration;

/// Defect guard on the number of boxes a single sample may span.
pub const BOX_CAP: usize = 1_000_000;

/// Draws a size-n sample. Ball i lands in box b when S_{b-1} < e_i <= S_b,
/// where e_i are i.i.d. standard exponentials and S_b = sum of the spacings
/// -log(1 - H_1), ..., -log(1 - H_b).
pub fn sample_configuration<R: Rng + ?Sized>(model: &HazardModel, n: u64, rng: &mut R) -> Result<Configuration> {
    if n == 0 {
        return Err(invalid_arg("sample size must be at least 1"));
    }
    let mut e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    e.sort_unstable_by(f64::total_cmp);
    let mut counts: Vec<u64> = Vec::new();
    let mut s = 0.0;
    for x in e {
        while x > s {
            if counts.len() >= BOX_CAP {
                return Err(Error::BoxCapExceeded(BOX_CAP));
            }
            s += model.sample_log_spacing(rng);
            counts.push(0);
        }
        *counts.last_mut().expect("at least one box") += 1;
    }
    Configuration::from_counts(counts)
}

/// Runs Q*_{0:n} = n, Q*_{1:n}, ... down to 0 directly from q*: each step
/// every remaining ball passes the next box with probability 1 - H.
pub fn simulate_tail_count_chain<R: Rng + ?Sized>(model: &HazardModel, n: u64, rng: &mut R) -> Result<Vec<u64>> {
    let mut path = vec![n];
    let mut l = n;
    while l > 0 {
        if path.len() > BOX_CAP {
            return Err(Error::BoxCapExceeded(BOX_CAP));
        }
        let h = model.sample_hazard(rng);
        l = Binomial::new(l, 1.0 - h).expect("probability in (0,1)").sample(rng);
        path.push(l);
    }
    Ok(path)
}

/// Q̂_{0:n}..Q̂_{k_max:n} for large n without drawing all n balls.
///
/// The maximum of the exponentials is drawn first, the renewal points are
/// extended past it to find the top box, and the order statistics are then
/// walked downward one at a time until the lowest threshold of interest.
/// Entries past the first box are n.
pub fn sample_reversed_tail_counts<R: Rng + ?Sized>(
    model: &HazardModel,
    n: u64,
    k_max: usize,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(invalid_arg("sample size must be at least 1"));
    }
    let from_ln_cdf = |lf: f64| -(-lf.exp_m1()).ln();
    let mut ln_f = open01(rng).ln() / n as f64;
    let top = from_ln_cdf(ln_f);

    let mut points = vec![0.0];
    let mut s = 0.0;
    while s < top {
        if points.len() > BOX_CAP {
            return Err(Error::BoxCapExceeded(BOX_CAP));
        }
        s += model.sample_log_spacing(rng);
        points.push(s);
    }
    // points[b] = S_b and the top box is M = points.len() - 1.
    let big_m = points.len() - 1;

    let mut out = Vec::with_capacity(k_max + 1);
    let mut above = 1u64;
    let mut pending: Option<f64> = None;
    for k in 0..=k_max {
        if k + 1 >= big_m {
            out.push(n);
            continue;
        }
        let threshold = points[big_m - 1 - k];
        loop {
            if above == n {
                break;
            }
            let next = match pending {
                Some(x) => x,
                None => {
                    ln_f += open01(rng).ln() / (n - above) as f64;
                    let x = from_ln_cdf(ln_f);
                    pending = Some(x);
                    x
                }
            };
            if next > threshold {
                above += 1;
                pending = None;
            } else {
                break;
            }
        }
        out.push(above);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for model in [HazardModel::gem(0.5).unwrap(), HazardModel::beta(2.0, 3.0).unwrap()] {
            for n in [1, 2, 10, 333] {
                let c = sample_configuration(&model, n, &mut rng).unwrap();
                assert_eq!(c.counts.iter().sum::<u64>(), n);
                assert!(*c.counts.last().unwrap() > 0);
                assert_eq!(*c.reversed_tail_counts.last().unwrap(), n);
            }
        }
    }

    #[test]
    fn single_ball_is_geometric_for_single_atom() {
        let model = HazardModel::atoms(vec![0.5], vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let r = 200_000;
        let mut hist = [0u64; 4];
        for _ in 0..r {
            let c = sample_configuration(&model, 1, &mut rng).unwrap();
            if c.m_max() <= 4 {
                hist[c.m_max() - 1] += 1;
            }
        }
        for (k, &h) in hist.iter().enumerate() {
            let p = model.mu(1, 0) * model.mu(0, 1).powi(k as i32);
            let se = (p * (1.0 - p) / r as f64).sqrt();
            assert!((h as f64 / r as f64 - p).abs() < 3.0 * se, "k={} {} vs {p}", k + 1, h);
        }
    }

    #[test]
    fn tail_chain_ends_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let model = HazardModel::gem(1.0).unwrap();
        let p = simulate_tail_count_chain(&model, 50, &mut rng).unwrap();
        assert_eq!(p[0], 50);
        assert_eq!(*p.last().unwrap(), 0);
        assert!(p.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn top_down_is_nondecreasing_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let model = HazardModel::gem(1.0).unwrap();
        for _ in 0..1000 {
            let q = sample_reversed_tail_counts(&model, 10_000, 3, &mut rng).unwrap();
            assert_eq!(q.len(), 4);
            assert!(q[0] >= 1);
            assert!(q.windows(2).all(|w| w[0] <= w[1]));
            assert!(q[3] <= 10_000);
        }
    }
}
