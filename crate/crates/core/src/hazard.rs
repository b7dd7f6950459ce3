//! Hazard distributions for the factor H of a residual allocation model,
//! their mixed moments E[H^i (1-H)^j], and the samplers built on them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize, Serializer};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::special::{integrate_unit, NeumaierSum};

/// A nonnegative real that may be +infinity. Infinity is a value of its own,
/// not a large float.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    /// Lossy conversion for C callers and printing.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::Infinite => s.serialize_str("inf"),
        }
    }
}

/// The distribution family of H.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HazardKind {
    /// GEM(0, theta), i.e. H ~ Beta(1, theta).
    Gem { theta: f64 },
    Beta { a: f64, b: f64 },
    Atoms { atoms: Vec<f64>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct HazardModel {
    kind: HazardKind,
    nonlattice: bool,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    #[serde(flatten)]
    kind: HazardKind,
    #[serde(default)]
    nonlattice: Option<bool>,
}

impl TryFrom<RawModel> for HazardModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let m = HazardModel::new(raw.kind)?;
        match raw.nonlattice {
            Some(flag) => Ok(m.with_nonlattice(flag)),
            None => Ok(m),
        }
    }
}

impl From<HazardModel> for RawModel {
    fn from(m: HazardModel) -> Self {
        RawModel { kind: m.kind, nonlattice: Some(m.nonlattice) }
    }
}

/// A mixed moment E[H^i (1-H)^j] together with its indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedMoment {
    pub i: u64,
    pub j: i64,
    pub value: ExtReal,
}

/// Partial sum of the series sum_m mu_{m,0}/m with a rigorous tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEstimate {
    pub value: f64,
    pub tail_bound: ExtReal,
    pub terms: u64,
}

impl HazardModel {
    /// Validates parameters. Continuous families default to a non-lattice
    /// declaration; atom mixtures default to lattice.
    pub fn new(kind: HazardKind) -> Result<Self> {
        match &kind {
            HazardKind::Gem { theta } => {
                if !(theta.is_finite() && *theta > 0.0) {
                    return Err(Error::InvalidModel(format!("GEM theta must be positive, got {theta}")));
                }
            }
            HazardKind::Beta { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return Err(Error::InvalidModel(format!("beta parameters must be positive, got ({a}, {b})")));
                }
            }
            HazardKind::Atoms { atoms, weights } => {
                if atoms.is_empty() || atoms.len() != weights.len() {
                    return Err(Error::InvalidModel("atoms and weights must be nonempty and of equal length".into()));
                }
                if let Some(h) = atoms.iter().find(|h| !(**h > 0.0 && **h < 1.0)) {
                    return Err(Error::InvalidModel(format!("atom {h} is not strictly inside (0,1)")));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::InvalidModel("weights must be nonnegative".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidModel(format!("weights sum to {total}, not 1")));
                }
            }
        }
        let nonlattice = !matches!(kind, HazardKind::Atoms { .. });
        Ok(HazardModel { kind, nonlattice })
    }

    pub fn gem(theta: f64) -> Result<Self> {
        Self::new(HazardKind::Gem { theta })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::new(HazardKind::Beta { a, b })
    }

    pub fn atoms(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::new(HazardKind::Atoms { atoms, weights })
    }

    /// Records the user's non-lattice declaration for -log(1-H). A model with
    /// a single supported atom is always lattice and ignores the flag.
    pub fn with_nonlattice(mut self, flag: bool) -> Self {
        self.nonlattice = flag && !self.is_single_atom();
        self
    }

    fn is_single_atom(&self) -> bool {
        match &self.kind {
            HazardKind::Atoms { weights, .. } => weights.iter().filter(|w| **w > 0.0).count() == 1,
            _ => false,
        }
    }

    pub fn kind(&self) -> &HazardKind {
        &self.kind
    }

    pub fn declared_nonlattice(&self) -> bool {
        self.nonlattice
    }

    /// The GEM parameter, if this is a GEM model.
    pub fn gem_theta(&self) -> Option<f64> {
        match self.kind {
            HazardKind::Gem { theta } => Some(theta),
            _ => None,
        }
    }

    /// (a, b) for the beta families; GEM(theta) is Beta(1, theta).
    pub fn beta_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            HazardKind::Gem { theta } => Some((1.0, theta)),
            HazardKind::Beta { a, b } => Some((a, b)),
            HazardKind::Atoms { .. } => None,
        }
    }

    /// Positive-weight atoms as (h, weight) pairs.
    pub fn atom_pairs(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            HazardKind::Atoms { atoms, weights } => Some(
                atoms.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(h, w)| (*h, *w)).collect(),
            ),
            _ => None,
        }
    }

    /// Compact text form, parsed back by [`FromStr`].
    pub fn spec_string(&self) -> String {
        match &self.kind {
            HazardKind::Gem { theta } => format!("gem:{theta}"),
            HazardKind::Beta { a, b } => format!("beta:{a},{b}"),
            HazardKind::Atoms { atoms, weights } => {
                let a: Vec<String> = atoms.iter().map(|x| x.to_string()).collect();
                let w: Vec<String> = weights.iter().map(|x| x.to_string()).collect();
                format!("atoms:{}/{}", a.join(","), w.join(","))
            }
        }
    }

    /// E[H^i (1-H)^j] for nonnegative j. Always finite and in (0, 1].
    pub fn mu(&self, i: u64, j: u64) -> f64 {
        match &self.kind {
            HazardKind::Gem { theta } => beta_moment(1.0, *theta, i, j),
            HazardKind::Beta { a, b } => beta_moment(*a, *b, i, j),
            HazardKind::Atoms { atoms, weights } => atoms
                .iter()
                .zip(weights)
                .map(|(h, w)| w * h.powi(i as i32) * (1.0 - h).powi(j as i32))
                .sum(),
        }
    }

    /// ln E[H^i (1-H)^j] for nonnegative j, accurate when the moment underflows.
    pub fn ln_mu(&self, i: u64, j: u64) -> f64 {
        match &self.kind {
            HazardKind::Gem { theta } => ln_beta_moment(1.0, *theta, i as f64, j as f64),
            HazardKind::Beta { a, b } => ln_beta_moment(*a, *b, i as f64, j as f64),
            HazardKind::Atoms { atoms, weights } => {
                let terms: Vec<f64> = atoms
                    .iter()
                    .zip(weights)
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(h, w)| w.ln() + i as f64 * h.ln() + j as f64 * (-h).ln_1p())
                    .collect();
                log_sum_exp(&terms)
            }
        }
    }

    /// E[H^i (1-H)^j] for j >= -1. Infinite exactly when j = -1 and the beta
    /// parameter b is at most 1.
    pub fn mu_moment(&self, i: u64, j: i64) -> Result<ExtReal> {
        if j < -1 {
            return Err(Error::InvalidArgument(format!("mixed moment needs j >= -1, got {j}")));
        }
        if j >= 0 {
            return Ok(ExtReal::Finite(self.mu(i, j as u64)));
        }
        Ok(match &self.kind {
            HazardKind::Gem { theta } => beta_moment_neg1(1.0, *theta, i),
            HazardKind::Beta { a, b } => beta_moment_neg1(*a, *b, i),
            HazardKind::Atoms { atoms, weights } => ExtReal::Finite(
                atoms.iter().zip(weights).map(|(h, w)| w * h.powi(i as i32) / (1.0 - h)).sum(),
            ),
        })
    }

    pub fn mixed_moment(&self, i: u64, j: i64) -> Result<MixedMoment> {
        Ok(MixedMoment { i, j, value: self.mu_moment(i, j)? })
    }

    /// mu_log = E[-log(1-H)], the mean renewal spacing.
    pub fn mu_log(&self) -> ExtReal {
        match &self.kind {
            HazardKind::Gem { theta } => ExtReal::Finite(1.0 / theta),
            // -log(1-H) with 1-H ~ Beta(b, a).
            HazardKind::Beta { a, b } => ExtReal::Finite(digamma(a + b) - digamma(*b)),
            HazardKind::Atoms { atoms, weights } => {
                ExtReal::Finite(atoms.iter().zip(weights).map(|(h, w)| -w * (-h).ln_1p()).sum())
            }
        }
    }

    /// Finite mu_log or [`Error::InfiniteMuLog`].
    pub fn finite_mu_log(&self) -> Result<f64> {
        self.mu_log().finite().ok_or(Error::InfiniteMuLog)
    }

    /// E[-log H].
    pub fn mean_neg_log_h(&self) -> ExtReal {
        match &self.kind {
            HazardKind::Gem { theta } => ExtReal::Finite(digamma(1.0 + theta) - digamma(1.0)),
            HazardKind::Beta { a, b } => ExtReal::Finite(digamma(a + b) - digamma(*a)),
            HazardKind::Atoms { atoms, weights } => {
                ExtReal::Finite(atoms.iter().zip(weights).map(|(h, w)| -w * h.ln()).sum())
            }
        }
    }

    /// P(H > u), given u and its complement w = 1 - u.
    pub fn survival(&self, u: f64, w: f64) -> f64 {
        match &self.kind {
            HazardKind::Gem { theta } => w.powf(*theta),
            HazardKind::Beta { a, b } => {
                if w <= 0.0 {
                    0.0
                } else if u <= 0.0 {
                    1.0
                } else {
                    beta_reg(*b, *a, w)
                }
            }
            HazardKind::Atoms { atoms, weights } => {
                atoms.iter().zip(weights).filter(|(h, _)| **h > u).map(|(_, w)| w).sum()
            }
        }
    }

    /// mu_log as the integral of P(H > u)/(1-u) over (0,1).
    pub fn mu_log_quadrature(&self) -> f64 {
        match &self.kind {
            // A step-function integrand; integrate each atom exactly.
            HazardKind::Atoms { atoms, weights } => {
                atoms.iter().zip(weights).map(|(h, w)| -w * (-h).ln_1p()).sum()
            }
            _ => integrate_unit(|u, w| if w > 0.0 { self.survival(u, w) / w } else { 0.0 }, 1e-13),
        }
    }

    /// Partial sums of mu_log = sum_{m>=1} mu_{m,0}/m. Stops once the term is
    /// below 1e-14 and the tail bound mu_{M+1,-1}/(M+1) is below `tail_tol`,
    /// or after `max_terms`.
    pub fn mu_log_series(&self, tail_tol: f64, max_terms: u64) -> SeriesEstimate {
        let mut sum = NeumaierSum::new();
        let mut m = 0;
        loop {
            m += 1;
            let term = self.mu(m, 0) / m as f64;
            sum.add(term);
            if term < 1e-14 || m >= max_terms {
                let bound = self.series_tail_bound(m);
                let done = matches!(bound, ExtReal::Finite(b) if b < tail_tol);
                if done || m >= max_terms {
                    return SeriesEstimate { value: sum.value(), tail_bound: bound, terms: m };
                }
            }
        }
    }

    /// sum_{m>M} mu_{m,0}/m <= E[H^{M+1}/(1-H)]/(M+1).
    fn series_tail_bound(&self, big_m: u64) -> ExtReal {
        match self.mu_moment(big_m + 1, -1) {
            Ok(ExtReal::Finite(v)) => ExtReal::Finite(v / (big_m + 1) as f64),
            _ => ExtReal::Infinite,
        }
    }

    /// One draw of H in (0,1).
    pub fn sample_hazard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let h = match &self.kind {
                HazardKind::Gem { theta } => 1.0 - rng.random::<f64>().powf(1.0 / theta),
                HazardKind::Beta { a, b } => {
                    let (x, y) = gamma_pair(*a, *b, rng);
                    x / (x + y)
                }
                HazardKind::Atoms { .. } => return self.sample_atom(rng).0,
            };
            if h > 0.0 && h < 1.0 {
                return h;
            }
        }
    }

    /// One draw of the renewal spacing -log(1-H), computed without forming 1-H.
    pub fn sample_log_spacing<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = match &self.kind {
                HazardKind::Gem { theta } => -open01(rng).ln() / theta,
                HazardKind::Beta { a, b } => {
                    let (g1, g2) = gamma_pair(*a, *b, rng);
                    (g1 + g2).ln() - g2.ln()
                }
                HazardKind::Atoms { .. } => return self.sample_atom(rng).1,
            };
            if x.is_finite() && x > 0.0 {
                return x;
            }
        }
    }

    /// Returns (h, -log(1-h)) for an atom chosen by weight.
    fn sample_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let HazardKind::Atoms { atoms, weights } = &self.kind else {
            unreachable!("sample_atom on a continuous model")
        };
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut pick = atoms.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc && *w > 0.0 {
                pick = k;
                break;
            }
        }
        // Trailing zero weights must not be picked by round-off.
        while weights[pick] == 0.0 && pick > 0 {
            pick -= 1;
        }
        (atoms[pick], -(-atoms[pick]).ln_1p())
    }

    /// A draw from the stationary delay density P(-log(1-H) > s)/mu_log.
    ///
    /// The delay is U times a length-biased spacing. For atoms the length
    /// bias is an exact reweighting. For the beta families the spacing is
    /// proposed from the exponentially tilted law e^{cx} f(x)/E[(1-H)^{-c}],
    /// which is again a beta law with b replaced by b - c, and accepted with
    /// probability c e x e^{-cx} <= 1. Here c = b/2.
    pub fn sample_stationary_delay<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.finite_mu_log()?;
        let spacing = match &self.kind {
            HazardKind::Atoms { atoms, weights } => {
                let lens: Vec<f64> = atoms.iter().map(|h| -(-h).ln_1p()).collect();
                let total: f64 = lens.iter().zip(weights).map(|(x, w)| x * w).sum();
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = lens.len() - 1;
                for k in 0..lens.len() {
                    acc += lens[k] * weights[k];
                    if u < acc && weights[k] > 0.0 {
                        pick = k;
                        break;
                    }
                }
                while weights[pick] == 0.0 && pick > 0 {
                    pick -= 1;
                }
                lens[pick]
            }
            _ => {
                let (a, b) = self.beta_params().expect("continuous model");
                let c = 0.5 * b;
                let proposal = HazardModel { kind: HazardKind::Beta { a, b: b - c }, nonlattice: true };
                loop {
                    let x = proposal.sample_log_spacing(rng);
                    let accept = c * std::f64::consts::E * x * (-c * x).exp();
                    if rng.random::<f64>() < accept {
                        break x;
                    }
                }
            }
        };
        Ok(open01(rng) * spacing)
    }
}

impl fmt::Display for HazardModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

/// Parses `gem:THETA`, `beta:A,B`, `atoms:H1,H2,.../W1,W2,...`, or a JSON object.
impl FromStr for HazardModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        let (name, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidModel(format!("cannot parse model '{s}'")))?;
        let nums = |t: &str| -> Result<Vec<f64>> {
            t.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::InvalidModel(format!("'{x}': {e}"))))
                .collect()
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "gem" => match nums(rest)?.as_slice() {
                [theta] => HazardModel::gem(*theta),
                _ => Err(Error::InvalidModel("gem takes one parameter".into())),
            },
            "beta" => match nums(rest)?.as_slice() {
                [a, b] => HazardModel::beta(*a, *b),
                _ => Err(Error::InvalidModel("beta takes two parameters".into())),
            },
            "atoms" => {
                let (h, w) = rest
                    .split_once('/')
                    .ok_or_else(|| Error::InvalidModel("atoms needs 'h1,h2/w1,w2'".into()))?;
                HazardModel::atoms(nums(h)?, nums(w)?)
            }
            other => Err(Error::InvalidModel(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Uniform on the open interval (0,1).
pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand::distr::Open01)
}

fn gamma_pair<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> (f64, f64) {
    let ga = Gamma::new(a, 1.0).expect("validated shape");
    let gb = Gamma::new(b, 1.0).expect("validated shape");
    (ga.sample(rng), gb.sample(rng))
}

/// B(a+i, b+j)/B(a, b) for nonnegative integers i, j.
fn beta_moment(a: f64, b: f64, i: u64, j: u64) -> f64 {
    if i + j <= 256 {
        let mut v = 1.0;
        for k in 0..i {
            v *= (a + k as f64) / (a + b + k as f64);
        }
        for k in 0..j {
            v *= (b + k as f64) / (a + b + (i + k) as f64);
        }
        v
    } else {
        ln_beta_moment(a, b, i as f64, j as f64).exp()
    }
}

fn ln_beta_moment(a: f64, b: f64, i: f64, j: f64) -> f64 {
    if i + j <= 256.0 {
        return beta_moment(a, b, i as u64, j as u64).ln();
    }
    ln_gamma(a + i) - ln_gamma(a) + ln_gamma(b + j) - ln_gamma(b) - ln_gamma(a + b + i + j) + ln_gamma(a + b)
}

/// B(a+i, b-1)/B(a, b), infinite when b <= 1.
fn beta_moment_neg1(a: f64, b: f64, i: u64) -> ExtReal {
    if b <= 1.0 {
        return ExtReal::Infinite;
    }
    // B(a+i, b-1)/B(a,b) = (a)_i / (a+b-1)_i * (a+b-1)/(b-1)
    let mut v = (a + b - 1.0) / (b - 1.0);
    for k in 0..i {
        v *= (a + k as f64) / (a + b - 1.0 + k as f64);
    }
    ExtReal::Finite(v)
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{integrate_unit, pochhammer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn beta_density(a: f64, b: f64) -> impl Fn(f64, f64) -> f64 {
        let ln_b = statrs::function::beta::ln_beta(a, b);
        move |u: f64, w: f64| ((a - 1.0) * u.ln() + (b - 1.0) * w.ln() - ln_b).exp()
    }

    #[test]
    fn total_mass_is_one() {
        for m in [HazardModel::gem(0.7).unwrap(), HazardModel::beta(2.0, 3.0).unwrap()] {
            assert_eq!(m.mu_moment(0, 0).unwrap(), ExtReal::Finite(1.0));
        }
    }

    #[test]
    fn gem_moments_against_quadrature() {
        // Oracle: integrate the Beta(1, theta) density directly.
        let m = HazardModel::gem(1.0).unwrap();
        let dens = beta_density(1.0, 1.0);
        let q01 = integrate_unit(|u, w| w * dens(u, w), 1e-13);
        let q11 = integrate_unit(|u, w| u * w * dens(u, w), 1e-13);
        assert!((q01 - 0.5).abs() < 1e-12);
        assert!((q11 - 1.0 / 6.0).abs() < 1e-12);
        assert!((m.mu(0, 1) - q01).abs() < 1e-12);
        assert!((m.mu(1, 1) - q11).abs() < 1e-12);
    }

    #[test]
    fn negative_order_moment_diverges_for_small_theta() {
        let m = HazardModel::gem(0.5).unwrap();
        assert_eq!(m.mu_moment(0, -1).unwrap(), ExtReal::Infinite);
        assert_eq!(HazardModel::gem(1.0).unwrap().mu_moment(0, -1).unwrap(), ExtReal::Infinite);
        // theta/(theta-1) for theta > 1.
        let v = HazardModel::gem(3.0).unwrap().mu_moment(0, -1).unwrap().finite().unwrap();
        assert!((v - 1.5).abs() < 1e-14);
        assert!(m.mu_moment(0, -2).is_err());
    }

    #[test]
    fn neg1_moment_against_quadrature() {
        let m = HazardModel::beta(2.0, 3.0).unwrap();
        let dens = beta_density(2.0, 3.0);
        for i in 0..4u64 {
            let q = integrate_unit(|u, w| u.powi(i as i32) / w * dens(u, w), 1e-13);
            let v = m.mu_moment(i, -1).unwrap().finite().unwrap();
            assert!((q - v).abs() < 1e-10, "i={i}: {q} vs {v}");
        }
    }

    #[test]
    fn closed_form_moments_match_quadrature() {
        let models = [
            HazardModel::gem(0.5).unwrap(),
            HazardModel::gem(2.0).unwrap(),
            HazardModel::beta(2.0, 3.0).unwrap(),
            HazardModel::beta(0.7, 1.3).unwrap(),
        ];
        for m in &models {
            let (a, b) = m.beta_params().unwrap();
            let dens = beta_density(a, b);
            for i in 0..=10u64 {
                for j in 0..=10u64 {
                    let q = integrate_unit(|u, w| u.powi(i as i32) * w.powi(j as i32) * dens(u, w), 1e-13);
                    assert!((q - m.mu(i, j)).abs() < 1e-9, "{m} ({i},{j}): {q} vs {}", m.mu(i, j));
                }
            }
        }
    }

    #[test]
    fn gem_pochhammer_identity() {
        for theta in [0.3, 1.0, 2.5, 7.0] {
            let m = HazardModel::gem(theta).unwrap();
            for i in 0..=30u64 {
                for j in 0..=(30 - i) {
                    let lhs = m.mu(i, j) * pochhammer(1.0 + theta, i + j);
                    let rhs = pochhammer(1.0, i) * pochhammer(theta, j);
                    assert!(((lhs - rhs) / rhs).abs() < 1e-12, "theta={theta} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn mu_log_values() {
        assert_eq!(HazardModel::gem(2.0).unwrap().mu_log(), ExtReal::Finite(0.5));
        let single = HazardModel::atoms(vec![0.5], vec![1.0]).unwrap();
        assert!((single.mu_log().to_f64() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn mu_log_beta_three_routes_agree() {
        let m = HazardModel::beta(2.0, 3.0).unwrap();
        let series = m.mu_log_series(1e-12, 10_000_000);
        assert!(matches!(series.tail_bound, ExtReal::Finite(b) if b < 1e-12));
        let quad = m.mu_log_quadrature();
        assert!((series.value - quad).abs() < 1e-9, "{} vs {}", series.value, quad);
        assert!((m.mu_log().to_f64() - quad).abs() < 1e-10);
        // psi(5) - psi(3) = 1/3 + 1/4.
        assert!((m.mu_log().to_f64() - 7.0 / 12.0).abs() < 1e-13);
    }

    #[test]
    fn ln_mu_matches_mu() {
        let m = HazardModel::atoms(vec![0.3, 0.7], vec![0.5, 0.5]).unwrap();
        assert!((m.ln_mu(3, 4).exp() - m.mu(3, 4)).abs() < 1e-15);
        let b = HazardModel::beta(2.0, 3.0).unwrap();
        assert!(((b.ln_mu(300, 400) - (b.mu(300, 400)).ln()) / b.ln_mu(300, 400)).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(HazardModel::gem(0.0).is_err());
        assert!(HazardModel::beta(1.0, -1.0).is_err());
        assert!(HazardModel::atoms(vec![1.0], vec![1.0]).is_err());
        assert!(HazardModel::atoms(vec![0.3, 0.4], vec![0.5, 0.4]).is_err());
        let single = HazardModel::atoms(vec![0.3], vec![1.0]).unwrap().with_nonlattice(true);
        assert!(!single.declared_nonlattice());
        let two = HazardModel::atoms(vec![0.3, 0.6], vec![0.5, 0.5]).unwrap().with_nonlattice(true);
        assert!(two.declared_nonlattice());
    }

    #[test]
    fn json_and_text_forms() {
        let m: HazardModel = serde_json::from_str(r#"{"kind":"gem","theta":2.0}"#).unwrap();
        assert_eq!(m, HazardModel::gem(2.0).unwrap());
        let json = serde_json::to_string(&HazardModel::beta(2.0, 3.0).unwrap()).unwrap();
        assert_eq!(json, r#"{"kind":"beta","a":2.0,"b":3.0,"nonlattice":true}"#);
        let back: HazardModel = json.parse().unwrap();
        assert_eq!(back, HazardModel::beta(2.0, 3.0).unwrap());
        let a: HazardModel = "atoms:0.3,0.7/0.5,0.5".parse().unwrap();
        assert_eq!(a.spec_string(), "atoms:0.3,0.7/0.5,0.5");
        assert!(serde_json::from_str::<HazardModel>(r#"{"kind":"gem","theta":-1}"#).is_err());
        assert!("poisson:1".parse::<HazardModel>().is_err());
    }

    #[test]
    fn degenerate_atom_sampling() {
        let m = HazardModel::atoms(vec![0.3, 0.7], vec![1.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(m.sample_hazard(&mut rng), 0.3);
        }
    }

    #[test]
    fn samples_in_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for m in [HazardModel::gem(1.0).unwrap(), HazardModel::beta(0.5, 0.5).unwrap()] {
            for _ in 0..10_000 {
                let h = m.sample_hazard(&mut rng);
                assert!(h > 0.0 && h < 1.0);
            }
        }
    }

    #[test]
    fn log_spacing_mean_is_mu_log() {
        let m = HazardModel::gem(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..r {
            let x = -(-m.sample_hazard(&mut rng)).ln_1p();
            s += x;
            s2 += x * x;
        }
        let mean = s / r as f64;
        let se = ((s2 / r as f64 - mean * mean) / r as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "{mean} +- {se}");
    }

    #[test]
    fn stationary_delay_deterministic_spacing_is_uniform() {
        let m = HazardModel::atoms(vec![1.0 - (-1.0f64).exp()], vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = 100_000;
        let mut s = 0.0;
        for _ in 0..r {
            let d = m.sample_stationary_delay(&mut rng).unwrap();
            assert!(d > 0.0 && d < 1.0 + 1e-12);
            s += d;
        }
        assert!((s / r as f64 - 0.5).abs() < 3.0 * (1.0 / 12.0 / r as f64).sqrt());
    }

    #[test]
    fn stationary_delay_mean_gem1() {
        // E[S*_0] = E[X^2]/(2 mu_log) with X ~ Exp(1): 2/2 = 1.
        let m = HazardModel::gem(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..r {
            let d = m.sample_stationary_delay(&mut rng).unwrap();
            s += d;
            s2 += d * d;
        }
        let mean = s / r as f64;
        let se = ((s2 / r as f64 - mean * mean) / r as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "{mean} +- {se}");
    }

    #[test]
    fn stationary_delay_beta_mean_matches_quadrature_oracle() {
        // Oracle: E[S*_0] = E[X^2]/(2 mu_log), E[X^2] = int 2 s P(X > s) ds
        //       = int 2 (-log w) P(H>u)/w du.
        let m = HazardModel::beta(2.0, 3.0).unwrap();
        let ex2 = integrate_unit(|u, w| 2.0 * (-w.ln()) * m.survival(u, w) / w, 1e-13);
        let want = ex2 / (2.0 * m.mu_log().to_f64());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = 400_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..r {
            let d = m.sample_stationary_delay(&mut rng).unwrap();
            s += d;
            s2 += d * d;
        }
        let mean = s / r as f64;
        let se = ((s2 / r as f64 - mean * mean) / r as f64).sqrt();
        assert!((mean - want).abs() < 3.0 * se, "{mean} vs {want} +- {se}");
    }
}
