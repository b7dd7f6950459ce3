//! Exact limit laws of the tail counts Q_k, reversed counts N_k and gaps G_j
//! as n -> infinity, and direct simulation of the limiting chain.
//!
//! Q_0 has the entrance law mu_{m,0}/(m mu_log) and Q moves by the Pascal
//! kernel p_{m,n} = C(n-1, m-1) mu_{n-m,m}: given H, each of the m
//! individuals has a geometric(1-H) number of offspring on {1, 2, ...}.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid_arg, Error, Result};
use crate::hazard::{open01, ExtReal, HazardKind, HazardModel};
use crate::records::IncreasingChainSpec;
use crate::special::{integrate, integrate_unit, ln_binomial, ln_factorial, NeumaierSum};

/// Default number of entrance-law probabilities tabulated for sampling.
pub const ENTRANCE_TABLE: usize = 1 << 16;
/// Default cap on any simulated value of Q.
pub const PATH_CAP: u64 = 1_000_000_000;

/// Exact limit laws derived from a hazard model with finite mu_log.
#[derive(Debug, Clone)]
pub struct LimitLaw {
    model: HazardModel,
    mu_log: f64,
    /// tail[k] = P(Q_0 > k) for k = 0..=table size.
    tail: Vec<f64>,
}

impl LimitLaw {
    pub fn new(model: &HazardModel) -> Result<Self> {
        Self::with_table_size(model, ENTRANCE_TABLE)
    }

    pub fn with_table_size(model: &HazardModel, size: usize) -> Result<Self> {
        let mu_log = model.finite_mu_log()?;
        let size = size.max(1);
        let mut law = LimitLaw { model: model.clone(), mu_log, tail: Vec::new() };
        let mut tail = vec![0.0; size + 1];
        tail[size] = law.n0_tail(size as u64);
        for k in (0..size).rev() {
            tail[k] = tail[k + 1] + law.entrance_pmf(k as u64 + 1);
        }
        tail[0] = 1.0;
        law.tail = tail;
        Ok(law)
    }

    pub fn model(&self) -> &HazardModel {
        &self.model
    }

    pub fn mu_log(&self) -> f64 {
        self.mu_log
    }

    /// P(Q_0 = m) = mu_{m,0}/(m mu_log).
    pub fn entrance_pmf(&self, m: u64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        (self.model.ln_mu(m, 0) - (m as f64).ln()).exp() / self.mu_log
    }

    /// P(Q_0 > k), by the closed form where one exists and by quadrature otherwise.
    pub fn n0_tail(&self, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if let Some(t) = self.tail.get(k as usize) {
            return *t;
        }
        match self.model.kind() {
            HazardKind::Gem { theta } => n0_tail_gem(*theta, k),
            HazardKind::Atoms { atoms, weights } => {
                // Sum over m > k of h^m/m, per atom.
                let mut total = 0.0;
                for (h, w) in atoms.iter().zip(weights) {
                    let mut s = NeumaierSum::new();
                    let mut pow = h.powi(k as i32 + 1);
                    let mut m = (k + 1) as f64;
                    loop {
                        let t = pow / m;
                        s.add(t);
                        // The rest is below t h/(1-h).
                        if t * h / (1.0 - h) < 1e-17 * s.value() || t == 0.0 {
                            break;
                        }
                        pow *= h;
                        m += 1.0;
                    }
                    total += w * s.value();
                }
                total / self.mu_log
            }
            HazardKind::Beta { .. } => self.n0_tail_integral(k),
        }
    }

    /// P(Q_0 > k) = (1/mu_log) int_0^1 P(H > u) u^k/(1-u) du by quadrature.
    pub fn n0_tail_integral(&self, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let v = match self.model.kind() {
            HazardKind::Atoms { atoms, weights } => atoms
                .iter()
                .zip(weights)
                .map(|(h, w)| w * integrate(|u| u.powi(k as i32) / (1.0 - u), 0.0, *h, 1e-15))
                .sum(),
            _ => integrate_unit(
                |u, w| if w > 0.0 { self.model.survival(u, w) * u.powi(k as i32) / w } else { 0.0 },
                1e-14,
            ),
        };
        v / self.mu_log
    }

    /// mu_{M+1,-1}/((M+1) mu_log), an upper bound on P(Q_0 > M) from the
    /// positive terms of the series; infinite when mu_{0,-1} is.
    pub fn entrance_tail_bound(&self, big_m: u64) -> ExtReal {
        match self.model.mu_moment(big_m + 1, -1) {
            Ok(ExtReal::Finite(v)) => ExtReal::Finite(v / ((big_m + 1) as f64 * self.mu_log)),
            _ => ExtReal::Infinite,
        }
    }

    /// p_{m,n} = C(n-1, m-1) mu_{n-m,m}; zero unless 1 <= m <= n.
    pub fn transition_pmf(&self, m: u64, n: u64) -> f64 {
        if m == 0 || n < m {
            return 0.0;
        }
        (ln_binomial(n - 1, m - 1) + self.model.ln_mu(n - m, m)).exp()
    }

    /// P(Q_{k+1} > big_n | Q_k = m): fewer than m successes in big_n trials,
    /// sum_{i<m} C(big_n, i) mu_{big_n-i, i}.
    pub fn transition_tail(&self, m: u64, big_n: u64) -> f64 {
        if big_n < m {
            return 1.0;
        }
        (0..m).map(|i| (ln_binomial(big_n, i) + self.model.ln_mu(big_n - i, i)).exp()).sum()
    }

    /// P(N_0 = n_0, ..., N_k = n_k).
    pub fn fdd_counts_pmf(&self, counts: &[u64]) -> Result<f64> {
        let Some(&n0) = counts.first() else {
            return Err(invalid_arg("need at least one count"));
        };
        if n0 == 0 {
            return Ok(0.0);
        }
        let total: u64 = counts.iter().sum();
        let mut s = NeumaierSum::new();
        s.add(ln_factorial(total - 1));
        let mut before = 0;
        for &c in counts {
            s.add(-ln_factorial(c));
            s.add(self.model.ln_mu(c, before));
            before += c;
        }
        Ok(s.value().exp() / self.mu_log)
    }

    /// The same probability as entrance_pmf(Q_0) times the Pascal kernel
    /// along Q_i = n_0 + ... + n_i.
    pub fn fdd_by_factorization(&self, counts: &[u64]) -> Result<f64> {
        let Some(&n0) = counts.first() else {
            return Err(invalid_arg("need at least one count"));
        };
        let mut p = self.entrance_pmf(n0);
        let mut q = n0;
        for &c in &counts[1..] {
            p *= self.transition_pmf(q, q + c);
            q += c;
        }
        Ok(p)
    }

    /// h_j = (1 - mu_{0,j})/(j mu_log) = P(G_j >= 1).
    pub fn hitting(&self, j: u64) -> Result<f64> {
        check_level(j)?;
        Ok((1.0 - self.model.mu(0, j)) / (j as f64 * self.mu_log))
    }

    /// P(G_j >= k) = h_j mu_{0,j}^{k-1} for k >= 1.
    pub fn gap_tail(&self, j: u64, k: u64) -> Result<f64> {
        if k == 0 {
            check_level(j)?;
            return Ok(1.0);
        }
        Ok(self.hitting(j)? * self.model.mu(0, j).powi(k as i32 - 1))
    }

    /// E G_j = 1/(j mu_log).
    pub fn mean_gap(&self, j: u64) -> Result<f64> {
        check_level(j)?;
        Ok(1.0 / (j as f64 * self.mu_log))
    }

    /// E Q_j = (mu_{0,-1} - 1) mu_{0,-1}^j / mu_log.
    pub fn mean_q(&self, j: u64) -> ExtReal {
        match self.model.mu_moment(0, -1) {
            Ok(ExtReal::Finite(r)) => ExtReal::Finite((r - 1.0) * r.powi(j as i32) / self.mu_log),
            _ => ExtReal::Infinite,
        }
    }

    /// lim E K_{j:n}: 1/(j mu_log) for j >= 1, E(-log H)/mu_log for j = 0.
    pub fn mean_small_count(&self, j: u64) -> ExtReal {
        if j == 0 {
            match self.model.mean_neg_log_h() {
                ExtReal::Finite(v) => ExtReal::Finite(v / self.mu_log),
                ExtReal::Infinite => ExtReal::Infinite,
            }
        } else {
            ExtReal::Finite(1.0 / (j as f64 * self.mu_log))
        }
    }

    /// Q as a weakly increasing chain for the generic solvers.
    pub fn chain_spec(&self) -> IncreasingChainSpec {
        let (a, b) = (self.clone(), self.clone());
        IncreasingChainSpec::new(move |j| a.entrance_pmf(j), move |i, j| b.transition_pmf(i, j))
    }

    /// Largest |h_n - (1 - mu_{0,n})/(n mu_log)| for n <= n_max, with h
    /// solved from the last-exit equations.
    pub fn hitting_self_consistency(&self, n_max: u64) -> f64 {
        let h = self.chain_spec().hitting_probabilities(n_max);
        (1..=n_max)
            .map(|n| (h[n as usize - 1] - self.hitting(n).expect("n >= 1")).abs())
            .fold(0.0, f64::max)
    }

    /// Inverse-CDF draw of Q_0. The table covers most of the mass; beyond it
    /// the tail function is inverted by doubling and bisection.
    pub fn sample_entrance<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        self.sample_entrance_capped(rng, PATH_CAP)
    }

    pub fn sample_entrance_capped<R: Rng + ?Sized>(&self, rng: &mut R, cap: u64) -> Result<u64> {
        let t = open01(rng);
        let size = self.tail.len() - 1;
        if self.tail[size] <= t {
            // Smallest k with tail[k] <= t.
            let k = self.tail.partition_point(|&x| x > t);
            return Ok(k as u64);
        }
        let mut lo = size as u64;
        let mut hi = lo;
        loop {
            hi = hi.saturating_mul(2);
            if hi > cap {
                if self.n0_tail(cap) > t {
                    return Err(Error::PathCapExceeded(cap));
                }
                hi = cap;
                break;
            }
            if self.n0_tail(hi) <= t {
                break;
            }
            lo = hi;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.n0_tail(mid) <= t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Runs Q until at least `steps` transitions are made and Q has passed
    /// `j_max`, so every occupation count G_1..G_{j_max} is final.
    pub fn simulate_chain<R: Rng + ?Sized>(&self, steps: usize, j_max: u64, rng: &mut R) -> Result<ChainPath> {
        self.simulate_chain_capped(steps, j_max, PATH_CAP, rng)
    }

    pub fn simulate_chain_capped<R: Rng + ?Sized>(
        &self,
        steps: usize,
        j_max: u64,
        cap: u64,
        rng: &mut R,
    ) -> Result<ChainPath> {
        let mut q = vec![self.sample_entrance_capped(rng, cap)?];
        while q.len() <= steps || *q.last().unwrap() <= j_max {
            let next = pascal_step(&self.model, *q.last().unwrap(), cap, rng)?;
            q.push(next);
        }
        Ok(ChainPath::from_q(q, j_max))
    }

    /// K_0..K_{j_max} along one path, stopped once Q exceeds `q_stop`. Past
    /// that level a further small count has probability of order 1/q_stop.
    pub fn small_count_tallies<R: Rng + ?Sized>(&self, j_max: u64, q_stop: u64, rng: &mut R) -> Result<Vec<u64>> {
        let cap = PATH_CAP.max(q_stop.saturating_mul(1000));
        let mut tallies = vec![0u64; j_max as usize + 1];
        let mut q = self.sample_entrance_capped(rng, cap)?;
        if q <= j_max {
            tallies[q as usize] += 1;
        }
        while q <= q_stop {
            let next = pascal_step(&self.model, q, cap, rng)?;
            let n = next - q;
            if n <= j_max {
                tallies[n as usize] += 1;
            }
            q = next;
        }
        Ok(tallies)
    }
}

fn check_level(j: u64) -> Result<()> {
    if j == 0 {
        return Err(invalid_arg("gap levels start at j = 1"));
    }
    Ok(())
}

/// P(Q_0 > k) = (1)_k/(1+theta)_k for GEM(theta).
pub fn n0_tail_gem(theta: f64, k: u64) -> f64 {
    if k < 200 {
        (1..=k).fold(1.0, |acc, i| acc * i as f64 / (theta + i as f64))
    } else {
        (ln_gamma(k as f64 + 1.0) + ln_gamma(1.0 + theta) - ln_gamma(1.0 + theta + k as f64)).exp()
    }
}

/// A simulated path of the limit chain with its derived sequences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainPath {
    pub q: Vec<u64>,
    /// N_0 = Q_0 and N_i = Q_i - Q_{i-1}.
    pub n: Vec<u64>,
    /// g[j-1] = number of k with Q_k = j.
    pub g: Vec<u64>,
}

impl ChainPath {
    pub fn from_q(q: Vec<u64>, j_max: u64) -> Self {
        let mut n = Vec::with_capacity(q.len());
        let mut prev = 0;
        for &x in &q {
            n.push(x - prev);
            prev = x;
        }
        let g = crate::records::occupation_counts(&q, j_max);
        ChainPath { q, n, g }
    }
}

const GEOMETRIC_SUM_LIMIT: u64 = 64;

/// One step of the mixed Pascal kernel: draw H (through the spacing
/// X = -log(1-H)), then the sum of m geometric(1-H) variables on {1, 2, ...}.
///
/// Small m sums the geometrics directly. Larger m uses the gamma-Poisson
/// form of the negative binomial, which has the same law.
pub fn pascal_step<R: Rng + ?Sized>(model: &HazardModel, m: u64, cap: u64, rng: &mut R) -> Result<u64> {
    let x = model.sample_log_spacing(rng);
    let failures = if m <= GEOMETRIC_SUM_LIMIT {
        // ln H = ln(1 - e^{-x}).
        let ln_h = (-(-x).exp_m1()).ln();
        let mut total = 0.0;
        for _ in 0..m {
            let f = (open01(rng).ln() / ln_h).floor();
            total += f;
        }
        total
    } else {
        let lambda = Gamma::new(m as f64, x.exp_m1()).expect("positive shape").sample(rng);
        if lambda.is_nan() || lambda > cap as f64 {
            return Err(Error::PathCapExceeded(cap));
        }
        if lambda > 0.0 {
            Poisson::new(lambda).expect("positive rate").sample(rng)
        } else {
            0.0
        }
    };
    let next = m as f64 + failures;
    if next.is_nan() || next > cap as f64 {
        return Err(Error::PathCapExceeded(cap));
    }
    Ok(next as u64)
}

/// max over m <= m_max of the residual of
/// sum_{i<=m} (1)_{i-1} theta/(1+theta)_i = 1 - (1)_m/(1+theta)_m.
pub fn theta_msum_residual(theta: f64, m_max: u64) -> Result<f64> {
    if theta.is_nan() || theta <= 0.0 {
        return Err(invalid_arg("theta must be positive"));
    }
    let mut worst: f64 = 0.0;
    let mut lhs = NeumaierSum::new();
    // t = (1)_{i-1}/(1+theta)_i
    let mut t = 1.0 / (1.0 + theta);
    for m in 1..=m_max {
        lhs.add(t * theta);
        let ratio = t * m as f64; // (1)_m/(1+theta)_m
        worst = worst.max((lhs.value() - (1.0 - ratio)).abs());
        t *= m as f64 / (1.0 + theta + m as f64);
    }
    Ok(worst)
}

/// Residuals r_n, n = 2..=n_max, of
/// (n+1)/(1 - mu_{0,n+1}) = sum_{k<n} C(n,k) (-1)^{n-k-1} (k+1)/(1 - mu_{0,k+1}).
///
/// The recursion comes from equating P(Ĝ_{1:n} >= 1) for consecutive n, and
/// the sum formula for that probability needs two balls, so n = 1 is excluded.
///
/// The right side is an alternating sum whose terms are far larger than the
/// result, so the moments are taken as exact rationals from the model's
/// floating-point parameters and the residual is rounded only at the end.
pub fn rec_residuals(model: &HazardModel, n_max: u64) -> Result<Vec<f64>> {
    let mu0 = exact_mu0(model, n_max + 1)?;
    let one = BigRational::one();
    let x: Vec<BigRational> = (0..=n_max)
        .map(|k| BigRational::from_integer(BigInt::from(k + 1)) / (&one - &mu0[k as usize + 1]))
        .collect();
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 2..=n_max {
        let mut rhs = BigRational::zero();
        let mut binom = BigInt::one();
        for k in 0..n {
            let term = BigRational::from_integer(binom.clone()) * &x[k as usize];
            if (n - k - 1) % 2 == 0 {
                rhs += term;
            } else {
                rhs -= term;
            }
            binom = binom * BigInt::from(n - k) / BigInt::from(k + 1);
        }
        let r = (&x[n as usize] - rhs).abs();
        out.push(r.to_f64().unwrap_or(f64::INFINITY));
    }
    Ok(out)
}

/// Largest residual of the recursion and of the summation identity for GEM(theta).
pub fn gem_recursion_check(theta: f64, n_max: u64) -> Result<f64> {
    let model = HazardModel::gem(theta)?;
    let rec = rec_residuals(&model, n_max)?.into_iter().fold(0.0, f64::max);
    Ok(rec.max(theta_msum_residual(theta, n_max)?))
}

fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| invalid_arg(format!("{x} has no exact rational form")))
}

/// mu_{0,j} for j = 0..=j_max as exact rationals.
fn exact_mu0(model: &HazardModel, j_max: u64) -> Result<Vec<BigRational>> {
    let mut out = Vec::with_capacity(j_max as usize + 1);
    match model.kind() {
        HazardKind::Atoms { atoms, weights } => {
            let hs = atoms.iter().map(|h| rational(*h)).collect::<Result<Vec<_>>>()?;
            let ws = weights.iter().map(|w| rational(*w)).collect::<Result<Vec<_>>>()?;
            let one = BigRational::one();
            let mut pows: Vec<BigRational> = vec![one.clone(); hs.len()];
            for _ in 0..=j_max {
                out.push(pows.iter().zip(&ws).map(|(p, w)| p * w).fold(BigRational::zero(), |a, b| a + b));
                for (p, h) in pows.iter_mut().zip(&hs) {
                    *p = &*p * (&one - h);
                }
            }
        }
        _ => {
            let (a, b) = model.beta_params().expect("beta family");
            let (a, b) = (rational(a)?, rational(b)?);
            let mut v = BigRational::one();
            for j in 0..=j_max {
                out.push(v.clone());
                let k = BigRational::from_integer(BigInt::from(j));
                v = v * (&b + &k) / (&a + &b + &k);
            }
        }
    }
    Ok(out)
}
