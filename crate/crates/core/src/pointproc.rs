//! The limiting picture as two independent point processes: Yule birth
//! times ("stars", Y) and a stationary renewal process ("bars", S).
//! Q_k = N_Y(S*_k) and G_1 + ... + G_j = N*_S(Y_j).

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::hazard::HazardModel;

/// Default cap on Yule births held by a builder.
pub const BIRTH_CAP: usize = 1_000_000_000;

/// The four equivalent ways of generating Yule birth times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum YuleConstruction {
    /// Y_k = sum_{i<=k} e_i/i.
    ExponentialSpacings,
    /// Y_j = e_{n:n} - e_{n-j:n} from n i.i.d. exponentials, n >= k.
    OrderStatistics { n: usize },
    /// Y_k = log(g_{k+1}/g_1) for gamma partial sums g.
    LogGamma,
    /// Y_k = log(1 + gamma_k / e) with gamma the arrivals of an independent
    /// rate-one Poisson process.
    Kendall,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YulePath {
    /// Y_0 = 0 < Y_1 < ... < Y_k.
    pub birth_times: Vec<f64>,
    pub construction: YuleConstruction,
}

impl YulePath {
    /// N_Y(t) = #{k : Y_k <= t}, valid for t below the last birth time.
    pub fn count(&self, t: f64) -> u64 {
        self.birth_times.partition_point(|&y| y <= t) as u64
    }
}

/// Y_0..Y_k by the chosen construction.
pub fn sample_yule<R: Rng + ?Sized>(k: usize, rng: &mut R, construction: YuleConstruction) -> Result<YulePath> {
    let mut y = Vec::with_capacity(k + 1);
    y.push(0.0);
    match construction {
        YuleConstruction::ExponentialSpacings => {
            let mut t = 0.0;
            for i in 1..=k {
                let e: f64 = Exp1.sample(rng);
                t += e / i as f64;
                y.push(t);
            }
        }
        YuleConstruction::OrderStatistics { n } => {
            if n < k {
                return Err(invalid_arg(format!("order-statistics construction needs n >= k, got n = {n} < {k}")));
            }
            let mut e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
            e.sort_unstable_by(f64::total_cmp);
            let top = e[n - 1];
            for j in 1..=k {
                let below = if j == n { 0.0 } else { e[n - 1 - j] };
                y.push(top - below);
            }
        }
        YuleConstruction::LogGamma => {
            let first: f64 = Exp1.sample(rng);
            let mut g = first;
            for _ in 1..=k {
                let e: f64 = Exp1.sample(rng);
                g += e;
                y.push((g / first).ln());
            }
        }
        YuleConstruction::Kendall => {
            let scale: f64 = Exp1.sample(rng);
            let mut gamma = 0.0;
            for _ in 1..=k {
                let e: f64 = Exp1.sample(rng);
                gamma += e;
                y.push((gamma / scale).ln_1p());
            }
        }
    }
    Ok(YulePath { birth_times: y, construction })
}

/// Lazily extended Yule process built from exponential spacings.
#[derive(Debug, Clone)]
pub struct YuleBuilder {
    births: Vec<f64>,
    cap: usize,
}

impl Default for YuleBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl YuleBuilder {
    pub fn new() -> Self {
        Self::with_cap(BIRTH_CAP)
    }

    pub fn with_cap(cap: usize) -> Self {
        YuleBuilder { births: vec![0.0], cap }
    }

    pub fn births(&self) -> &[f64] {
        &self.births
    }

    fn push<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.births.len() >= self.cap {
            return Err(Error::PathCapExceeded(self.cap as u64));
        }
        let k = self.births.len();
        let e: f64 = Exp1.sample(rng);
        let next = self.births[k - 1] + e / k as f64;
        self.births.push(next);
        Ok(())
    }

    /// Extends until some birth lies strictly after t.
    pub fn extend_past<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) -> Result<()> {
        while *self.births.last().unwrap() <= t {
            self.push(rng)?;
        }
        Ok(())
    }

    /// Extends until Y_k exists.
    pub fn extend_to_index<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Result<()> {
        while self.births.len() <= k {
            self.push(rng)?;
        }
        Ok(())
    }

    pub fn path(&self) -> YulePath {
        YulePath { birth_times: self.births.clone(), construction: YuleConstruction::ExponentialSpacings }
    }
}

/// N_Y(t) = 1 + #{k >= 1 : Y_k <= t}, extending the builder as needed.
pub fn yule_count<R: Rng + ?Sized>(builder: &mut YuleBuilder, t: f64, rng: &mut R) -> Result<u64> {
    if t < 0.0 {
        return Err(invalid_arg("time must be nonnegative"));
    }
    builder.extend_past(t, rng)?;
    Ok(builder.births.partition_point(|&y| y <= t) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayMode {
    /// First point from the stationary delay law.
    Stationary,
    /// First point is a spacing, S_1 = -log(1-H_1).
    ZeroDelay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalPath {
    /// All points in (0, horizon].
    pub points: Vec<f64>,
    pub horizon: f64,
    pub delay_mode: DelayMode,
}

impl RenewalPath {
    /// Number of points in (0, t] for t <= horizon.
    pub fn count(&self, t: f64) -> u64 {
        self.points.partition_point(|&s| s <= t) as u64
    }
}

/// Lazily extended renewal process.
#[derive(Debug, Clone)]
pub struct RenewalBuilder {
    model: HazardModel,
    mode: DelayMode,
    points: Vec<f64>,
}

impl RenewalBuilder {
    pub fn new(model: &HazardModel, mode: DelayMode) -> Result<Self> {
        if mode == DelayMode::Stationary {
            model.finite_mu_log()?;
        }
        Ok(RenewalBuilder { model: model.clone(), mode, points: Vec::new() })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    fn push<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let next = match self.points.last() {
            None => match self.mode {
                DelayMode::Stationary => self.model.sample_stationary_delay(rng)?,
                DelayMode::ZeroDelay => self.model.sample_log_spacing(rng),
            },
            Some(&s) => s + self.model.sample_log_spacing(rng),
        };
        self.points.push(next);
        Ok(())
    }

    pub fn extend_past<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) -> Result<()> {
        while self.points.last().is_none_or(|&s| s <= t) {
            self.push(rng)?;
        }
        Ok(())
    }

    /// Extends until the point with index k (S*_k) exists.
    pub fn extend_to_index<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Result<()> {
        while self.points.len() <= k {
            self.push(rng)?;
        }
        Ok(())
    }
}

/// Renewal points on (0, horizon].
pub fn sample_renewal<R: Rng + ?Sized>(
    model: &HazardModel,
    horizon: f64,
    delay_mode: DelayMode,
    rng: &mut R,
) -> Result<RenewalPath> {
    let mut b = RenewalBuilder::new(model, delay_mode)?;
    b.extend_past(horizon, rng)?;
    let mut points = b.points;
    points.pop();
    Ok(RenewalPath { points, horizon, delay_mode })
}

/// Stars (Yule births) and bars (renewal points) in time order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InterleavingTrace {
    /// Over {'Y', 'S'}, starting with 'Y'.
    pub symbols: String,
    /// The stars after the last bar are a lower bound only.
    pub censored_last_count: bool,
}

impl InterleavingTrace {
    pub fn from_symbols(symbols: &str) -> Result<Self> {
        if !symbols.starts_with('Y') {
            return Err(invalid_arg("a trace starts with the birth at time 0"));
        }
        if let Some(c) = symbols.chars().find(|c| *c != 'Y' && *c != 'S') {
            return Err(invalid_arg(format!("unexpected symbol '{c}'")));
        }
        Ok(InterleavingTrace { symbols: symbols.to_string(), censored_last_count: true })
    }

    /// Stars between consecutive bars: N_0 (before the first bar), N_1, ...,
    /// and the stars after the last bar, which is censored.
    pub fn counts(&self) -> Vec<u64> {
        let mut out = vec![0u64];
        for c in self.symbols.chars() {
            if c == 'Y' {
                *out.last_mut().unwrap() += 1;
            } else {
                out.push(0);
            }
        }
        out
    }

    /// Bars between consecutive stars: G_1, ..., G_{stars-1}. Bars after the
    /// last star belong to an unfinished gap and are not included.
    pub fn gaps(&self) -> Vec<u64> {
        let mut out = Vec::new();
        let mut run = 0u64;
        for (i, c) in self.symbols.chars().enumerate() {
            if c == 'Y' {
                if i > 0 {
                    out.push(run);
                }
                run = 0;
            } else {
                run += 1;
            }
        }
        out
    }

    /// Bars after the last star.
    pub fn trailing_bars(&self) -> u64 {
        self.symbols.chars().rev().take_while(|c| *c == 'S').count() as u64
    }

    /// Inverse of [`Self::counts`].
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if counts.first().is_none_or(|&c| c == 0) {
            return Err(invalid_arg("the first count must be positive"));
        }
        let mut s = String::new();
        for (i, &c) in counts.iter().enumerate() {
            if i > 0 {
                s.push('S');
            }
            s.extend(std::iter::repeat_n('Y', c as usize));
        }
        Self::from_symbols(&s)
    }

    /// Inverse of [`Self::gaps`] together with [`Self::trailing_bars`].
    pub fn from_gaps(gaps: &[u64], trailing_bars: u64) -> Result<Self> {
        let mut s = String::from("Y");
        for &g in gaps {
            s.extend(std::iter::repeat_n('S', g as usize));
            s.push('Y');
        }
        s.extend(std::iter::repeat_n('S', trailing_bars as usize));
        Self::from_symbols(&s)
    }
}

/// Merges births and renewal points up to the earlier of the two last
/// events. Exact ties have probability zero and are reported as errors.
pub fn interleave(births: &[f64], points: &[f64]) -> Result<InterleavingTrace> {
    let (Some(&ly), Some(&ls)) = (births.last(), points.last()) else {
        return Err(Error::InsufficientHorizon("both processes need at least one point".into()));
    };
    let end = ly.min(ls);
    let mut s = String::new();
    let (mut i, mut j) = (0, 0);
    loop {
        let y = births.get(i).copied().filter(|&y| y <= end);
        let b = points.get(j).copied().filter(|&b| b <= end);
        match (y, b) {
            (Some(y), Some(b)) if y == b => {
                return Err(Error::Degenerate(format!("tie between a birth and a renewal point at {y}")))
            }
            (Some(y), Some(b)) if y < b => {
                s.push('Y');
                i += 1;
            }
            (Some(_), None) => {
                s.push('Y');
                i += 1;
            }
            (_, Some(_)) => {
                s.push('S');
                j += 1;
            }
            (None, None) => break,
        }
    }
    InterleavingTrace::from_symbols(&s)
}

/// Q, N and G read off the two processes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSequences {
    /// Q_0..Q_k.
    pub q: Vec<u64>,
    /// N_0..N_k from differencing Q, followed by the stars after S*_k.
    pub n: Vec<u64>,
    /// Whether the last entry of `n` is only a lower bound, i.e. no observed
    /// renewal point S*_{k+1} closes it.
    pub n_censored: bool,
    /// G_1..G_j.
    pub g: Vec<u64>,
    pub trace: InterleavingTrace,
}

/// Q_k = N_Y(S*_k) for k <= k_bars and G_1 + ... + G_j = N*_S(Y_j) for
/// j <= j_stars. Fails with [`Error::InsufficientHorizon`] when the paths
/// do not reach far enough.
pub fn build_limit_sequences(
    yule: &YulePath,
    renewal: &[f64],
    k_bars: usize,
    j_stars: usize,
) -> Result<LimitSequences> {
    let births = &yule.birth_times;
    let last_y = *births.last().expect("Y_0 exists");
    let last_s = renewal.last().copied().unwrap_or(0.0);
    if renewal.len() <= k_bars {
        return Err(Error::InsufficientHorizon(format!("need renewal point S*_{k_bars}")));
    }
    if renewal[k_bars] >= last_y {
        return Err(Error::InsufficientHorizon(format!("Yule births end before S*_{k_bars}")));
    }
    if births.len() <= j_stars {
        return Err(Error::InsufficientHorizon(format!("need birth Y_{j_stars}")));
    }
    if births[j_stars] >= last_s {
        return Err(Error::InsufficientHorizon(format!("renewal points end before Y_{j_stars}")));
    }
    let q: Vec<u64> = renewal[..=k_bars].iter().map(|&s| births.partition_point(|&y| y <= s) as u64).collect();
    let mut n = Vec::with_capacity(q.len());
    let mut prev = 0;
    for &x in &q {
        n.push(x - prev);
        prev = x;
    }
    let n_censored = match renewal.get(k_bars + 1) {
        Some(&s) if s < last_y => {
            n.push(births.partition_point(|&y| y <= s) as u64 - prev);
            false
        }
        _ => {
            n.push(births.len() as u64 - prev);
            true
        }
    };
    let cum: Vec<u64> = births[1..=j_stars].iter().map(|&y| renewal.partition_point(|&s| s <= y) as u64).collect();
    let mut g = Vec::with_capacity(j_stars);
    let mut prev = 0;
    for &c in &cum {
        g.push(c - prev);
        prev = c;
    }
    let trace = interleave(births, renewal)?;
    Ok(LimitSequences { q, n, n_censored, g, trace })
}

/// Extends both builders just far enough, then builds.
pub fn build_limit_sequences_lazy<R: Rng + ?Sized>(
    yule: &mut YuleBuilder,
    renewal: &mut RenewalBuilder,
    k_bars: usize,
    j_stars: usize,
    rng: &mut R,
) -> Result<LimitSequences> {
    yule.extend_to_index(j_stars, rng)?;
    renewal.extend_to_index(k_bars, rng)?;
    renewal.extend_past(yule.births[j_stars], rng)?;
    yule.extend_past(renewal.points[k_bars], rng)?;
    build_limit_sequences(&yule.path(), &renewal.points, k_bars, j_stars)
}

/// Q_0..Q_k = N_Y(S*_0..S*_k) with an exponential-spacings Yule process.
/// Returns `None` when more than `birth_cap` births would be needed.
pub fn yule_at_renewal<R: Rng + ?Sized>(
    model: &HazardModel,
    k: usize,
    birth_cap: usize,
    rng: &mut R,
) -> Result<Option<Vec<u64>>> {
    let mut rb = RenewalBuilder::new(model, DelayMode::Stationary)?;
    rb.extend_to_index(k, rng)?;
    let mut yb = YuleBuilder::with_cap(birth_cap);
    let mut q = Vec::with_capacity(k + 1);
    for &s in &rb.points[..=k] {
        match yule_count(&mut yb, s, rng) {
            Ok(c) => q.push(c),
            Err(Error::PathCapExceeded(_)) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(q))
}

/// ln Q_k for one path, through Kendall's representation
/// N_Y(t) = 1 + Poisson((e^t - 1) e) at t = S*_k. Exact Poisson draws for
/// moderate means; a normal approximation past 1e12, where its relative
/// error in ln Q is far below anything observable.
pub fn log_q<R: Rng + ?Sized>(model: &HazardModel, k: usize, rng: &mut R) -> Result<f64> {
    let mut s = model.sample_stationary_delay(rng)?;
    for _ in 0..k {
        s += model.sample_log_spacing(rng);
    }
    let scale: f64 = Exp1.sample(rng);
    let ln_lambda = if s > 30.0 { s + scale.ln() } else { (s.exp_m1() * scale).ln() };
    if ln_lambda < 12.0 * std::f64::consts::LN_10 {
        let lambda = ln_lambda.exp();
        let p = if lambda > 0.0 { Poisson::new(lambda).expect("positive mean").sample(rng) } else { 0.0 };
        Ok(p.ln_1p())
    } else {
        let z: f64 = StandardNormal.sample(rng);
        Ok(ln_lambda + (z * (-0.5 * ln_lambda).exp()).ln_1p())
    }
}

/// Number of births in (s, s+t] given N_Y(s) = m is NB(m, e^{-t}) on {0, 1, ...}.
pub fn yule_increment_pmf(m: u64, t: f64, k: u64) -> f64 {
    let p = (-t).exp();
    let ln = crate::special::ln_binomial(k + m - 1, k) + m as f64 * p.ln() + k as f64 * (-p).ln_1p();
    ln.exp()
}
