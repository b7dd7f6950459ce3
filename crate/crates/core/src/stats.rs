//! Goodness-of-fit, independence and mean checks for the Monte Carlo suites.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::special::normal_central_quantile;

/// Default significance threshold for the acceptance suites.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;

/// Minimum expected count per chi-square cell.
pub const MIN_EXPECTED: f64 = 5.0;

pub type Outcome = Vec<i64>;

/// Outcome frequencies. Outcomes are ordered lexicographically, which is
/// also the adjacency used when merging sparse cells.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmpiricalDist {
    counts: BTreeMap<Outcome, u64>,
    total: u64,
    pub seeds: Vec<u64>,
}

impl EmpiricalDist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, outcome: Outcome) {
        self.add_n(outcome, 1);
    }

    pub fn add_n(&mut self, outcome: Outcome, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(outcome).or_insert(0) += n;
        self.total += n;
    }

    pub fn merge(&mut self, other: &EmpiricalDist) {
        for (o, &c) in &other.counts {
            self.add_n(o.clone(), c);
        }
        for s in &other.seeds {
            if !self.seeds.contains(s) {
                self.seeds.push(*s);
            }
        }
        self.seeds.sort_unstable();
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, outcome: &[i64]) -> u64 {
        self.counts.get(outcome).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Outcome, u64)> {
        self.counts.iter().map(|(o, &c)| (o, c))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Relative frequencies as a pmf list.
    pub fn to_pmf(&self) -> Vec<(Outcome, f64)> {
        let t = self.total as f64;
        self.counts.iter().map(|(o, &c)| (o.clone(), c as f64 / t)).collect()
    }

    /// Image under a map of outcomes, e.g. a marginal.
    pub fn map(&self, f: impl Fn(&[i64]) -> Outcome) -> EmpiricalDist {
        let mut out = EmpiricalDist { seeds: self.seeds.clone(), ..Default::default() };
        for (o, &c) in &self.counts {
            out.add_n(f(o), c);
        }
        out
    }
}

impl FromIterator<Outcome> for EmpiricalDist {
    fn from_iter<I: IntoIterator<Item = Outcome>>(iter: I) -> Self {
        let mut d = EmpiricalDist::new();
        for o in iter {
            d.add(o);
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Pass when the data fit: p >= threshold, or error <= tolerance.
    Fit,
    /// Pass when the test rejects: p < threshold.
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub test: String,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dof: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub abs_error: Option<f64>,
    /// Significance level for p-values, tolerance for errors.
    pub threshold: f64,
    pub direction: Direction,
    pub pass: bool,
    pub sample_sizes: Vec<u64>,
    pub seeds: Vec<u64>,
}

impl GofReport {
    fn from_p(test: &str, statistic: f64, dof: Option<usize>, p: f64, sample_sizes: Vec<u64>) -> Self {
        GofReport {
            test: test.to_string(),
            statistic,
            dof,
            p_value: Some(p),
            abs_error: None,
            threshold: DEFAULT_THRESHOLD,
            direction: Direction::Fit,
            pass: p >= DEFAULT_THRESHOLD,
            sample_sizes,
            seeds: Vec::new(),
        }
    }

    /// An exact check: pass iff |error| <= tolerance.
    pub fn abs_error_check(test: impl Into<String>, error: f64, tolerance: f64) -> Self {
        let e = error.abs();
        GofReport {
            test: test.into(),
            statistic: e,
            dof: None,
            p_value: None,
            abs_error: Some(e),
            threshold: tolerance,
            direction: Direction::Fit,
            pass: e <= tolerance,
            sample_sizes: Vec::new(),
            seeds: Vec::new(),
        }
    }

    /// Pass iff the target lies within `half_width` of the estimate.
    pub fn mean_check(test: impl Into<String>, estimate: f64, half_width: f64, target: f64, n: u64) -> Self {
        let mut r = Self::abs_error_check(test, estimate - target, half_width);
        r.statistic = estimate;
        r.sample_sizes = vec![n];
        r
    }

    fn recompute(&mut self) {
        self.pass = match (self.p_value, self.direction) {
            (Some(p), Direction::Fit) => p >= self.threshold,
            (Some(p), Direction::Reject) => p < self.threshold,
            (None, _) => self.abs_error.is_some_and(|e| e <= self.threshold),
        };
    }

    pub fn named(mut self, test: impl Into<String>) -> Self {
        self.test = test.into();
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self.recompute();
        self
    }

    pub fn expect_reject(mut self) -> Self {
        self.direction = Direction::Reject;
        self.recompute();
        self
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, statistic / 2.0)
}

/// Pearson goodness of fit against `exact`, a list of outcomes with their
/// probabilities in the order used for merging. Mass not covered by the
/// list, together with observed outcomes outside it, forms one residual cell.
/// Adjacent cells are merged greedily until each expects at least five.
pub fn chi_square_gof(emp: &EmpiricalDist, exact: &[(Outcome, f64)]) -> Result<GofReport> {
    if emp.is_empty() {
        return Err(Error::Empty("no observations".into()));
    }
    let total = emp.total() as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0.0);
    let mut covered_p = 0.0;
    let mut covered_n = 0u64;
    for (outcome, p) in exact {
        let c = emp.count(outcome);
        covered_p += p;
        covered_n += c;
        e += p * total;
        o += c as f64;
        if e >= MIN_EXPECTED {
            cells.push((o, e));
            e = 0.0;
            o = 0.0;
        }
    }
    // Residual cell: leftover partial cell plus uncovered mass.
    let rest_e = e + (1.0 - covered_p).max(0.0) * total;
    let rest_o = o + (emp.total() - covered_n) as f64;
    if rest_e >= MIN_EXPECTED || cells.is_empty() {
        cells.push((rest_o, rest_e));
    } else if let Some(last) = cells.last_mut() {
        last.0 += rest_o;
        last.1 += rest_e;
    }
    if cells.len() < 2 {
        return Err(Error::Degenerate("chi-square test needs at least two cells".into()));
    }
    let stat = pearson(&cells);
    let dof = cells.len() - 1;
    Ok(GofReport::from_p("chi-square-gof", stat, Some(dof), chi_square_sf(stat, dof), vec![emp.total()])
        .with_seeds(emp.seeds.clone()))
}

fn pearson(cells: &[(f64, f64)]) -> f64 {
    cells
        .iter()
        .map(|&(o, e)| {
            if e > 0.0 {
                (o - e) * (o - e) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum()
}

/// Merges adjacent indices of a marginal until each group holds at least
/// `min_count`; a short final group joins its predecessor.
fn merge_groups(marginal: &[u64], min_count: f64) -> Vec<usize> {
    let mut group = Vec::with_capacity(marginal.len());
    let mut g = 0;
    let mut acc = 0.0;
    for &m in marginal {
        group.push(g);
        acc += m as f64;
        if acc >= min_count {
            g += 1;
            acc = 0.0;
        }
    }
    if g > 0 && group.last() == Some(&g) {
        for x in group.iter_mut() {
            if *x == g {
                *x = g - 1;
            }
        }
    }
    group
}

fn contingency(table: &[Vec<u64>], min_row: f64, min_col: f64) -> Result<(f64, usize)> {
    let nr = table.len();
    let nc = table[0].len();
    let row: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<u64> = (0..nc).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let rg = merge_groups(&row, min_row);
    let cg = merge_groups(&col, min_col);
    let r = rg.last().map_or(0, |&g| g + 1);
    let c = cg.last().map_or(0, |&g| g + 1);
    if r < 2 || c < 2 {
        return Err(Error::Degenerate("contingency table collapses to a single row or column".into()));
    }
    let mut merged = vec![vec![0u64; c]; r];
    for i in 0..nr {
        for j in 0..nc {
            merged[rg[i]][cg[j]] += table[i][j];
        }
    }
    let rows: Vec<f64> = merged.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let cols: Vec<f64> = (0..c).map(|j| merged.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    let total: f64 = rows.iter().sum();
    let mut cells = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            cells.push((merged[i][j] as f64, rows[i] * cols[j] / total));
        }
    }
    Ok((pearson(&cells), (r - 1) * (c - 1)))
}

/// Chi-square test of independence of the two coordinates of a paired
/// sample. Rows and columns are merged in value order until every cell
/// expects at least five.
pub fn chi_square_independence(joint: &EmpiricalDist) -> Result<GofReport> {
    if joint.is_empty() {
        return Err(Error::Empty("no observations".into()));
    }
    let mut xs: Vec<i64> = Vec::new();
    let mut ys: Vec<i64> = Vec::new();
    for (o, _) in joint.iter() {
        if o.len() != 2 {
            return Err(crate::error::invalid_arg("independence test needs pairs"));
        }
        xs.push(o[0]);
        ys.push(o[1]);
    }
    xs.sort_unstable();
    xs.dedup();
    ys.sort_unstable();
    ys.dedup();
    let mut table = vec![vec![0u64; ys.len()]; xs.len()];
    for (o, c) in joint.iter() {
        let i = xs.binary_search(&o[0]).unwrap();
        let j = ys.binary_search(&o[1]).unwrap();
        table[i][j] += c;
    }
    // Each merged marginal carries at least sqrt(5 N), so every cell
    // expects at least 5.
    let min = (MIN_EXPECTED * joint.total() as f64).sqrt();
    let (stat, dof) = contingency(&table, min, min)?;
    Ok(GofReport::from_p("chi-square-independence", stat, Some(dof), chi_square_sf(stat, dof), vec![joint.total()])
        .with_seeds(joint.seeds.clone()))
}

/// Two-sample chi-square homogeneity test on discrete outcomes.
pub fn chi_square_two_sample(a: &EmpiricalDist, b: &EmpiricalDist) -> Result<GofReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("both samples need observations".into()));
    }
    let mut keys: Vec<&Outcome> = a.iter().map(|(o, _)| o).chain(b.iter().map(|(o, _)| o)).collect();
    keys.sort();
    keys.dedup();
    let table = vec![
        keys.iter().map(|k| a.count(k)).collect::<Vec<_>>(),
        keys.iter().map(|k| b.count(k)).collect::<Vec<_>>(),
    ];
    let (na, nb) = (a.total() as f64, b.total() as f64);
    let min_col = MIN_EXPECTED * (na + nb) / na.min(nb);
    let (stat, dof) = contingency(&table, 0.0, min_col)?;
    let mut seeds = a.seeds.clone();
    seeds.extend(&b.seeds);
    Ok(GofReport::from_p("chi-square-two-sample", stat, Some(dof), chi_square_sf(stat, dof), vec![a.total(), b.total()])
        .with_seeds(seeds))
}

/// Asymptotic Kolmogorov tail P(K > lambda).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let sq = ne.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample Kolmogorov-Smirnov test against a continuous cdf.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<GofReport> {
    if samples.is_empty() {
        return Err(Error::Empty("no observations".into()));
    }
    let mut x = samples.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(GofReport::from_p("ks-one-sample", d, None, ks_p(d, n), vec![x.len() as u64]))
}

/// Two-sample Kolmogorov-Smirnov test with effective size nm/(n+m).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<GofReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("both samples need observations".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    y.sort_unstable_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(GofReport::from_p("ks-two-sample", d, None, ks_p(d, n * m / (n + m)), vec![x.len() as u64, y.len() as u64]))
}

/// Total variation distance between the empirical law and `exact`; mass
/// outside the listed outcomes is compared as one lump.
pub fn tv_distance(emp: &EmpiricalDist, exact: &[(Outcome, f64)]) -> f64 {
    let t = emp.total() as f64;
    if t == 0.0 {
        return f64::NAN;
    }
    let mut s = 0.0;
    let mut covered_p = 0.0;
    let mut covered_n = 0;
    for (o, p) in exact {
        let c = emp.count(o);
        covered_n += c;
        covered_p += p;
        s += (c as f64 / t - p).abs();
    }
    let rest_emp = (emp.total() - covered_n) as f64 / t;
    0.5 * (s + (rest_emp - (1.0 - covered_p).max(0.0)).abs())
}

/// Running sums for a sample mean, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MeanAccumulator {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    pub fn std_error(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        ((self.sum_sq / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt()
    }

    /// (mean, half-width) of a normal-approximation interval.
    pub fn ci(&self, level: f64) -> Result<(f64, f64)> {
        if self.n < 2 {
            return Err(Error::Empty("need at least two samples".into()));
        }
        Ok((self.mean(), normal_central_quantile(level) * self.std_error()))
    }
}

/// (mean, half-width) of a normal-approximation interval at `level`.
pub fn mean_ci(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&level) || level == 0.0 {
        return Err(crate::error::invalid_arg("level must lie in (0,1)"));
    }
    let mut acc = MeanAccumulator::default();
    for &x in samples {
        acc.push(x);
    }
    acc.ci(level)
}
