//! The tail-count chain Q*_{k:n} (balls beyond box k), its decrement matrix,
//! and the potential g_{m:n} that drives the reversed chain.

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid_arg, Result};
use crate::hazard::HazardModel;
use crate::special::{dot, ln_binomial, ln_factorial_table};

/// q*(l, m) = C(l, m) mu_{l-m, m}: of l balls, m pass the next box.
pub fn qstar_transition(model: &HazardModel, l: u64, m: u64) -> Result<f64> {
    if m > l {
        return Err(invalid_arg(format!("q*({l}, {m}) needs m <= l")));
    }
    Ok(ln_qstar(model, l, m).exp())
}

pub(crate) fn ln_qstar(model: &HazardModel, l: u64, m: u64) -> f64 {
    ln_binomial(l, m) + model.ln_mu(l - m, m)
}

/// q(l, m) = q*(l, m)/(1 - mu_{0,l}) for m < l, zero on the diagonal.
pub fn decrement_transition(model: &HazardModel, l: u64, m: u64) -> Result<f64> {
    if l == 0 || m > l {
        return Err(invalid_arg(format!("q({l}, {m}) needs 0 <= m <= l, l >= 1")));
    }
    if m == l {
        return Ok(0.0);
    }
    Ok(qstar_transition(model, l, m)? / (1.0 - model.mu(0, l)))
}

/// The tail-count chain of a size-n sample.
#[derive(Debug, Clone)]
pub struct TailCountChainSpec {
    pub model: HazardModel,
    pub n: u64,
}

impl TailCountChainSpec {
    pub fn new(model: HazardModel, n: u64) -> Self {
        TailCountChainSpec { model, n }
    }

    pub fn qstar(&self, l: u64, m: u64) -> Result<f64> {
        self.check(l)?;
        qstar_transition(&self.model, l, m)
    }

    pub fn decrement(&self, l: u64, m: u64) -> Result<f64> {
        self.check(l)?;
        decrement_transition(&self.model, l, m)
    }

    /// Largest deviation of a q* or q row sum from 1 over rows 1..=l_max.
    pub fn max_row_error(&self, l_max: u64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for l in 1..=l_max.min(self.n) {
            let star: f64 = (0..=l).map(|m| self.qstar(l, m)).sum::<Result<f64>>()?;
            let dec: f64 = (0..l).map(|m| self.decrement(l, m)).sum::<Result<f64>>()?;
            worst = worst.max((star - 1.0).abs()).max((dec - 1.0).abs());
        }
        Ok(worst)
    }

    fn check(&self, l: u64) -> Result<()> {
        if l > self.n {
            return Err(invalid_arg(format!("state {l} exceeds n = {}", self.n)));
        }
        Ok(())
    }
}

/// g_{m:n}, the expected number of indices k with Q*_{k:n} = m, for m = 1..=n.
#[derive(Debug, Clone)]
pub struct FinitePotential {
    model: HazardModel,
    n: u64,
    g: Vec<f64>,
}

const CHUNK: usize = 4096;

impl FinitePotential {
    /// Backward recursion from g_{n:n} = 1/(1 - mu_{0,n}). Quadratic in n.
    pub fn new(model: &HazardModel, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid_arg("finite potential needs n >= 1"));
        }
        let g = if let Some((a, b)) = model.beta_params() {
            beta_potential(model, a, b, n as usize)
        } else {
            atom_potential(model, n as usize)
        };
        Ok(FinitePotential { model: model.clone(), n, g })
    }

    /// Straightforward evaluation of the recursion, one q* at a time.
    pub fn new_reference(model: &HazardModel, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid_arg("finite potential needs n >= 1"));
        }
        let n_us = n as usize;
        let mut g = vec![0.0; n_us + 1];
        for m in (1..=n).rev() {
            let s: f64 = (m + 1..=n).map(|l| g[l as usize] * ln_qstar(model, l, m).exp()).sum();
            g[m as usize] = if m == n { 1.0 } else { s } / (1.0 - model.mu(0, m));
        }
        Ok(FinitePotential { model: model.clone(), n, g })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn g(&self, m: u64) -> Result<f64> {
        if m == 0 || m > self.n {
            return Err(invalid_arg(format!("g_{{m:n}} needs 1 <= m <= n, got m = {m}")));
        }
        Ok(self.g[m as usize])
    }

    /// g_{1:n}..g_{n:n}.
    pub fn values(&self) -> &[f64] {
        &self.g[1..]
    }

    /// q̂_n(l, m) = g_{m:n} q*(m, l)/g_{l:n}, the law of Q̂_{k+1} given Q̂_k = l.
    pub fn reversed_transition(&self, l: u64, m: u64) -> Result<f64> {
        let gl = self.g(l)?;
        let gm = self.g(m)?;
        if m < l {
            return Ok(0.0);
        }
        Ok(gm * ln_qstar(&self.model, m, l).exp() / gl)
    }

    /// Probability that the reversed chain stops at l, i.e. that l = n.
    pub fn absorption(&self, l: u64) -> Result<f64> {
        let gl = self.g(l)?;
        Ok(if l == self.n { 1.0 / gl } else { 0.0 })
    }

    /// Law of Q̂_0 = L_n: g_{m:n} q*(m, 0).
    pub fn initial_pmf(&self, m: u64) -> Result<f64> {
        Ok(self.g(m)? * ln_qstar(&self.model, m, 0).exp())
    }
}

pub fn finite_potential(model: &HazardModel, n: u64, m: u64) -> Result<f64> {
    FinitePotential::new(model, n)?.g(m)
}

/// ln q*(l, m) = A[l] + B[l-m] + c_m for the beta families, so the inner sum
/// of the recursion is a dot product of precomputed exponentials.
fn beta_potential(model: &HazardModel, a: f64, b: f64, n: usize) -> Vec<f64> {
    let lf = ln_factorial_table(n);
    let la: Vec<f64> = (0..=n).map(|l| lf[l] - ln_gamma(a + b + l as f64)).collect();
    let lb: Vec<f64> = (0..=n).map(|k| ln_gamma(a + k as f64) - lf[k]).collect();
    let c0 = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    let lc = |m: usize| ln_gamma(b + m as f64) - lf[m] + c0;

    let span = |v: &[f64]| {
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        (hi, hi - lo)
    };
    let (sa, ra) = span(&la[1..]);
    let (sb, rb) = span(&lb[1..]);
    let mut g = vec![0.0; n + 1];
    g[n] = 1.0 / (1.0 - model.mu(0, n as u64));

    if ra > 600.0 || rb > 600.0 {
        for m in (1..n).rev() {
            let s: f64 = (m + 1..=n).map(|l| g[l] * (la[l] + lb[l - m] + lc(m)).exp()).sum();
            g[m] = s / (1.0 - model.mu(0, m as u64));
        }
        return g;
    }

    let ea: Vec<f64> = la.iter().map(|x| (x - sa).exp()).collect();
    let eb: Vec<f64> = lb.iter().map(|x| (x - sb).exp()).collect();
    // ga[l] = g_l * ea[l], filled in as g is computed.
    let mut ga = vec![0.0; n + 1];
    ga[n] = g[n] * ea[n];
    for m in (1..n).rev() {
        let lhs = &ga[m + 1..=n];
        let rhs = &eb[1..=n - m];
        let s = if lhs.len() > 2 * CHUNK {
            let parts: Vec<f64> = lhs
                .par_chunks(CHUNK)
                .zip(rhs.par_chunks(CHUNK))
                .map(|(x, y)| dot(x, y))
                .collect();
            parts.iter().sum()
        } else {
            dot(lhs, rhs)
        };
        g[m] = s * (sa + sb + lc(m)).exp() / (1.0 - model.mu(0, m as u64));
        ga[m] = g[m] * ea[m];
    }
    g
}

/// Atom mixtures: for each atom the summand in l is a unimodal
/// negative-binomial-shaped profile, so sum outward from its mode until the
/// terms are negligible.
fn atom_potential(model: &HazardModel, n: usize) -> Vec<f64> {
    let pairs = model.atom_pairs().expect("atom model");
    let lf = ln_factorial_table(n);
    let mut g = vec![0.0; n + 1];
    g[n] = 1.0 / (1.0 - model.mu(0, n as u64));
    for m in (1..n).rev() {
        let mut total = 0.0;
        for &(h, w) in &pairs {
            let (lh, l1h) = (h.ln(), (-h).ln_1p());
            let ln_term = |l: usize| lf[l] - lf[m] - lf[l - m] + (l - m) as f64 * lh + m as f64 * l1h;
            let mode = ((m as f64 / (1.0 - h)).ceil() as usize).clamp(m + 1, n);
            let peak = ln_term(mode);
            let mut s = 0.0;
            for l in mode..=n {
                let t = ln_term(l);
                s += g[l] * (t - peak).exp();
                if t < peak - 46.0 {
                    break;
                }
            }
            for l in (m + 1..mode).rev() {
                let t = ln_term(l);
                s += g[l] * (t - peak).exp();
                if t < peak - 46.0 {
                    break;
                }
            }
            total += w * s * peak.exp();
        }
        g[m] = total / (1.0 - model.mu(0, m as u64));
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qstar_values() {
        let m = HazardModel::gem(1.0).unwrap();
        assert!((qstar_transition(&m, 2, 1).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        for l in 0..=20 {
            assert!((qstar_transition(&m, l, l).unwrap() - m.mu(0, l)).abs() < 1e-13);
        }
        assert!(qstar_transition(&m, 2, 3).is_err());
        assert_eq!(decrement_transition(&m, 3, 3).unwrap(), 0.0);
        assert!(decrement_transition(&m, 0, 0).is_err());
    }

    #[test]
    fn rows_sum_to_one() {
        for model in [
            HazardModel::gem(1.0).unwrap(),
            HazardModel::beta(2.0, 3.0).unwrap(),
            HazardModel::atoms(vec![0.3, 0.7], vec![0.5, 0.5]).unwrap(),
        ] {
            let spec = TailCountChainSpec::new(model, 20);
            assert!(spec.max_row_error(20).unwrap() < 1e-10);
        }
    }

    #[test]
    fn small_potentials() {
        let m = HazardModel::gem(1.0).unwrap();
        assert!((finite_potential(&m, 1, 1).unwrap() - 2.0).abs() < 1e-14);
        let p = FinitePotential::new(&m, 7).unwrap();
        assert!((p.g(7).unwrap() - 1.0 / (1.0 - m.mu(0, 7))).abs() < 1e-14);
    }

    #[test]
    fn fast_paths_match_reference() {
        for model in [
            HazardModel::gem(0.5).unwrap(),
            HazardModel::beta(2.0, 3.0).unwrap(),
            HazardModel::beta(0.7, 1.4).unwrap(),
            HazardModel::atoms(vec![0.3, 0.7], vec![0.5, 0.5]).unwrap(),
        ] {
            let fast = FinitePotential::new(&model, 300).unwrap();
            let slow = FinitePotential::new_reference(&model, 300).unwrap();
            for (x, y) in fast.values().iter().zip(slow.values()) {
                assert!(((x - y) / y).abs() < 1e-10, "{model}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn reversed_rows_and_initial_law() {
        let model = HazardModel::beta(2.0, 3.0).unwrap();
        let n = 40;
        let p = FinitePotential::new(&model, n).unwrap();
        for l in 1..=n {
            let row: f64 = (l..=n).map(|m| p.reversed_transition(l, m).unwrap()).sum();
            let total = row + p.absorption(l).unwrap();
            assert!((total - 1.0).abs() < 1e-10, "row {l}: {total}");
        }
        let init: f64 = (1..=n).map(|m| p.initial_pmf(m).unwrap()).sum();
        assert!((init - 1.0).abs() < 1e-10);
    }
}
