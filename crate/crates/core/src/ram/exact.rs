use crate::error::Result;
use crate::hazard::HazardModel;
use crate::special::{ln_factorial, NeumaierSum};

use super::check_counts;

/// ln P(N_{1:n} = n_1, ..., N_{k:n} = n_k, nothing beyond box k).
pub fn ln_exact_config_probability(model: &HazardModel, counts: &[u64]) -> Result<f64> {
    let n = check_counts(counts)?;
    let mut s = NeumaierSum::new();
    s.add(ln_factorial(n));
    let mut tail = n;
    for &c in counts {
        tail -= c;
        s.add(-ln_factorial(c));
        s.add(model.ln_mu(c, tail));
    }
    Ok(s.value())
}

/// Multinomial coefficient times the product of mixed moments
/// mu_{n_i, n_{i+1} + ... + n_k} over the boxes.
pub fn exact_config_probability(model: &HazardModel, counts: &[u64]) -> Result<f64> {
    Ok(ln_exact_config_probability(model, counts)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ball_in_third_box() {
        let m = HazardModel::gem(1.0).unwrap();
        let p = exact_config_probability(&m, &[0, 0, 1]).unwrap();
        assert!((p - 0.125).abs() < 1e-15);
    }

    #[test]
    fn all_in_first_box() {
        let m = HazardModel::beta(2.0, 3.0).unwrap();
        let p = exact_config_probability(&m, &[4]).unwrap();
        assert!((p - m.mu(4, 0)).abs() < 1e-15);
    }

    #[test]
    fn two_atoms_brute_force() {
        let h = [0.3, 0.7];
        let w = [0.5, 0.5];
        // Sum over the atoms used for boxes 1 and 2; two orderings of the balls.
        let mut brute = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                brute += w[a] * w[b] * 2.0 * h[a] * (1.0 - h[a]) * h[b];
            }
        }
        let m = HazardModel::atoms(h.to_vec(), w.to_vec()).unwrap();
        let p = exact_config_probability(&m, &[1, 1]).unwrap();
        assert!((p - brute).abs() < 1e-15);
        assert!((p - 2.0 * m.mu(1, 1) * m.mu(1, 0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_trailing_zero() {
        let m = HazardModel::gem(1.0).unwrap();
        assert!(exact_config_probability(&m, &[1, 0]).is_err());
    }

    #[test]
    fn large_n_does_not_underflow_in_log_space() {
        let m = HazardModel::gem(1.0).unwrap();
        let counts: Vec<u64> = (0..200).map(|i| if i % 2 == 0 { 3 } else { 1 }).collect();
        let lp = ln_exact_config_probability(&m, &counts).unwrap();
        assert!(lp.is_finite() && lp < -700.0);
    }
}
