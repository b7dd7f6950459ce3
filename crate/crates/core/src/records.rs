//! Weakly increasing Markov chains on {1, 2, ...}: record chains, occupation
//! laws, hitting and potential solvers, and the reconstruction of a kernel from
//! its hitting probabilities and self-transition probabilities.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::hazard::open01;

type Pmf = Arc<dyn Fn(u64) -> f64 + Send + Sync>;
type Kernel = Arc<dyn Fn(u64, u64) -> f64 + Send + Sync>;

/// A probability law p_0 on {1, 2, ...} together with its upper tails.
#[derive(Clone)]
pub struct InitialLaw {
    pmf: Pmf,
    /// tail(i) = p_0(i) + p_0(i+1) + ...
    tail: Pmf,
    geometric: Option<f64>,
}

impl fmt::Debug for InitialLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialLaw").field("geometric", &self.geometric).finish_non_exhaustive()
    }
}

impl InitialLaw {
    /// p_0(j) = (1-p)^{j-1} p.
    pub fn geometric(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid_arg(format!("geometric parameter {p} not in (0,1)")));
        }
        Ok(InitialLaw {
            pmf: Arc::new(move |j| if j == 0 { 0.0 } else { p * (1.0 - p).powi(j as i32 - 1) }),
            tail: Arc::new(move |i| if i <= 1 { 1.0 } else { (1.0 - p).powi(i as i32 - 1) }),
            geometric: Some(p),
        })
    }

    /// A law given by its pmf and an exact upper-tail rule.
    pub fn from_fns(
        pmf: impl Fn(u64) -> f64 + Send + Sync + 'static,
        tail: impl Fn(u64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        InitialLaw { pmf: Arc::new(pmf), tail: Arc::new(tail), geometric: None }
    }

    pub fn pmf(&self, j: u64) -> f64 {
        if j == 0 {
            0.0
        } else {
            (self.pmf)(j)
        }
    }

    pub fn tail(&self, i: u64) -> f64 {
        if i <= 1 {
            1.0
        } else {
            (self.tail)(i)
        }
    }

    /// Inverse-CDF draw, searching upward through the tails.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = open01(rng);
        if let Some(p) = self.geometric {
            return 1 + (u.ln() / (-p).ln_1p()).floor() as u64;
        }
        // Smallest j with tail(j + 1) <= u.
        let mut j = 1;
        while self.tail(j + 1) > u {
            j += 1;
        }
        j
    }
}

/// Which upper records of an i.i.d. stream are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFlavor {
    /// Values >= the current record.
    Weak,
    /// Values > the current record.
    Strict,
}

/// p^<=_{i,j} = p_0(j) 1(i <= j) / (p_0(i) + p_0(i+1) + ...).
pub fn weak_record_transition(p0: &InitialLaw, i: u64, j: u64) -> Result<f64> {
    let denom = p0.tail(i);
    if denom <= 0.0 {
        return Err(Error::Degenerate(format!("initial law has no mass at or above {i}")));
    }
    Ok(if i <= j { p0.pmf(j) / denom } else { 0.0 })
}

/// p^<_{i,j} = p_0(j) 1(i < j) / (p_0(i+1) + p_0(i+2) + ...).
pub fn strict_record_transition(p0: &InitialLaw, i: u64, j: u64) -> Result<f64> {
    let denom = p0.tail(i + 1);
    if denom <= 0.0 {
        return Err(Error::Degenerate(format!("initial law has no mass above {i}")));
    }
    Ok(if i < j { p0.pmf(j) / denom } else { 0.0 })
}

/// Parameters of the zero-modified geometric law of an occupation count:
/// P(G_j >= k) = hit * stay^{k-1} for k >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupationLaw {
    pub hit: f64,
    pub stay: f64,
}

impl OccupationLaw {
    pub fn tail(&self, k: u64) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.hit * self.stay.powi(k as i32 - 1)
        }
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.tail(k) - self.tail(k + 1)
    }

    pub fn mean(&self) -> f64 {
        self.hit / (1.0 - self.stay)
    }
}

/// A weakly increasing chain given by its initial law and kernel.
#[derive(Clone)]
pub struct IncreasingChainSpec {
    initial: Pmf,
    transition: Kernel,
}

impl fmt::Debug for IncreasingChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IncreasingChainSpec").finish_non_exhaustive()
    }
}

impl IncreasingChainSpec {
    pub fn new(
        initial: impl Fn(u64) -> f64 + Send + Sync + 'static,
        transition: impl Fn(u64, u64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        IncreasingChainSpec { initial: Arc::new(initial), transition: Arc::new(transition) }
    }

    pub fn weak_record(p0: &InitialLaw) -> Self {
        let (a, b) = (p0.clone(), p0.clone());
        Self::new(move |j| a.pmf(j), move |i, j| weak_record_transition(&b, i, j).unwrap_or(0.0))
    }

    pub fn strict_record(p0: &InitialLaw) -> Self {
        let (a, b) = (p0.clone(), p0.clone());
        Self::new(move |j| a.pmf(j), move |i, j| strict_record_transition(&b, i, j).unwrap_or(0.0))
    }

    pub fn initial(&self, j: u64) -> f64 {
        if j == 0 {
            0.0
        } else {
            (self.initial)(j)
        }
    }

    pub fn transition(&self, i: u64, j: u64) -> f64 {
        if j < i {
            0.0
        } else {
            (self.transition)(i, j)
        }
    }

    /// h_1..h_{j_max} by the last-exit recursion
    /// h_j = p_{0,j} + sum_{i<j} h_i p_{i,j}/(1 - p_{i,i}).
    pub fn hitting_probabilities(&self, j_max: u64) -> Vec<f64> {
        let mut h: Vec<f64> = Vec::with_capacity(j_max as usize);
        let mut leave = Vec::with_capacity(j_max as usize);
        for j in 1..=j_max {
            let mut s = self.initial(j);
            for i in 1..j {
                s += h[i as usize - 1] * self.transition(i, j) / leave[i as usize - 1];
            }
            h.push(s);
            leave.push(1.0 - self.transition(j, j));
        }
        h
    }

    /// g_1..g_{j_max} by forward substitution in g_j = p_{0,j} + sum_{i<=j} g_i p_{i,j}.
    pub fn solve_potential(&self, j_max: u64) -> Vec<f64> {
        let mut g: Vec<f64> = Vec::with_capacity(j_max as usize);
        for j in 1..=j_max {
            let mut s = self.initial(j);
            for i in 1..j {
                s += g[i as usize - 1] * self.transition(i, j);
            }
            g.push(s / (1.0 - self.transition(j, j)));
        }
        g
    }

    pub fn occupation_law(&self, j: u64) -> Result<OccupationLaw> {
        if j == 0 {
            return Err(invalid_arg("states start at 1"));
        }
        let hit = self.hitting_probabilities(j)[j as usize - 1];
        Ok(OccupationLaw { hit, stay: self.transition(j, j) })
    }

    /// Largest residual of g_j = h_j/(1 - p_{j,j}) and of the potential
    /// equation itself, evaluated with the forward-recursion hitting probabilities.
    pub fn potential_residual(&self, j_max: u64) -> f64 {
        let h = self.hitting_probabilities(j_max);
        let g = self.solve_potential(j_max);
        let from_h: Vec<f64> = (1..=j_max).map(|j| h[j as usize - 1] / (1.0 - self.transition(j, j))).collect();
        let mut worst: f64 = 0.0;
        for j in 1..=j_max {
            let mut rhs = self.initial(j);
            for i in 1..=j {
                rhs += from_h[i as usize - 1] * self.transition(i, j);
            }
            worst = worst.max((rhs - from_h[j as usize - 1]).abs()).max((g[j as usize - 1] - from_h[j as usize - 1]).abs());
        }
        worst
    }

    /// 1 - sum_{j <= j_trunc} p_{i,j}: the mass beyond the truncation.
    pub fn row_deficit(&self, i: u64, j_trunc: u64) -> f64 {
        1.0 - (i..=j_trunc).map(|j| self.transition(i, j)).sum::<f64>()
    }
}

/// A kernel rebuilt from hitting probabilities h_j and self-transition
/// probabilities p_{j,j}:
/// p_{i,j} = 1(j=i) p_{i,i} + 1(j>i)(1 - p_{i,i}) h_j prod_{i<k<j}(1 - h_k).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    h: Vec<f64>,
    diag: Vec<f64>,
    /// prod_{j <= J}(1 - h_j) over the supplied window. Should tend to zero.
    pub product_tail: f64,
}

impl Reconstruction {
    pub fn new(h: Vec<f64>, diag: Vec<f64>) -> Result<Self> {
        if h.is_empty() || h.len() != diag.len() {
            return Err(invalid_arg("h and diagonal must be nonempty and of equal length"));
        }
        if let Some(x) = h.iter().find(|x| !(**x > 0.0 && **x <= 1.0)) {
            return Err(invalid_arg(format!("hitting probability {x} not in (0,1]")));
        }
        if let Some(x) = diag.iter().find(|x| !(**x >= 0.0 && **x < 1.0)) {
            return Err(invalid_arg(format!("self-transition probability {x} not in [0,1)")));
        }
        let product_tail = h.iter().map(|x| 1.0 - x).product();
        Ok(Reconstruction { h, diag, product_tail })
    }

    /// The infinite product condition can only be checked on the window; this
    /// reports whether the window product is already below `tol`.
    pub fn product_condition_holds(&self, tol: f64) -> bool {
        self.product_tail <= tol
    }

    pub fn window(&self) -> u64 {
        self.h.len() as u64
    }

    pub fn transition(&self, i: u64, j: u64) -> Result<f64> {
        let w = self.window();
        if i == 0 || j == 0 || i > w || j > w {
            return Err(invalid_arg(format!("({i}, {j}) outside the window 1..={w}")));
        }
        let (iu, ju) = (i as usize - 1, j as usize - 1);
        Ok(if j == i {
            self.diag[iu]
        } else if j > i {
            (1.0 - self.diag[iu]) * self.h[ju] * self.h[iu + 1..ju].iter().map(|x| 1.0 - x).product::<f64>()
        } else {
            0.0
        })
    }

    /// p_{0,j} = h_j prod_{k<j}(1 - h_k).
    pub fn initial(&self, j: u64) -> Result<f64> {
        if j == 0 || j > self.window() {
            return Err(invalid_arg(format!("state {j} outside the window")));
        }
        let ju = j as usize - 1;
        Ok(self.h[ju] * self.h[..ju].iter().map(|x| 1.0 - x).product::<f64>())
    }

    /// Jump kernel p_{i,j}/(1 - p_{i,i}) for j > i.
    pub fn jump_transition(&self, i: u64, j: u64) -> Result<f64> {
        if j <= i {
            return Ok(0.0);
        }
        Ok(self.transition(i, j)? / (1.0 - self.diag[i as usize - 1]))
    }
}

/// Output of [`simulate_record_chain`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordPath {
    pub path: Vec<u64>,
    /// occupation[j-1] = number of k with Q_k = j, for j = 1..=j_max.
    pub occupation: Vec<u64>,
}

const RECORD_DRAW_CAP: u64 = 1_000_000_000;

/// Keeps the weak or strict upper records of an i.i.d. stream from p_0 until
/// at least `steps` records exist and the chain has passed `j_max`.
pub fn simulate_record_chain<R: Rng + ?Sized>(
    p0: &InitialLaw,
    flavor: RecordFlavor,
    steps: usize,
    j_max: u64,
    rng: &mut R,
) -> Result<RecordPath> {
    let mut cur = p0.sample(rng);
    let mut path = vec![cur];
    let mut draws = 1u64;
    while path.len() < steps || cur <= j_max {
        let x = p0.sample(rng);
        draws += 1;
        if draws > RECORD_DRAW_CAP {
            return Err(Error::PathCapExceeded(RECORD_DRAW_CAP));
        }
        let keep = match flavor {
            RecordFlavor::Weak => x >= cur,
            RecordFlavor::Strict => x > cur,
        };
        if keep {
            cur = x;
            path.push(cur);
        }
    }
    let occupation = occupation_counts(&path, j_max);
    Ok(RecordPath { path, occupation })
}

/// Visits to each state 1..=j_max along a path.
pub fn occupation_counts(path: &[u64], j_max: u64) -> Vec<u64> {
    let mut occ = vec![0u64; j_max as usize];
    for &q in path {
        if q >= 1 && q <= j_max {
            occ[q as usize - 1] += 1;
        }
    }
    occ
}
