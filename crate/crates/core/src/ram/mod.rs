//! The finite-sample world: n balls thrown into the boxes of a residual
//! allocation model.
//!
//! A sample is summarized by its box counts N_1..N_M (M the highest occupied
//! box), or equivalently by the reversed tail counts Q̂_k (balls in the last
//! k+1 boxes) or by the gap vector Ĝ_1..Ĝ_n. The three readings are dual
//! views of one stars-and-bars string.

mod codec;
mod exact;
mod potential;
mod sample;

pub use codec::{counts_from_gaps, gaps_from_counts, reversed_tail_counts, tail_counts_from_reversed};
pub use exact::{exact_config_probability, ln_exact_config_probability};
pub use potential::{decrement_transition, finite_potential, qstar_transition, FinitePotential, TailCountChainSpec};
pub use sample::{
    sample_configuration, sample_reversed_tail_counts, simulate_tail_count_chain, BOX_CAP,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};

/// A balls-in-boxes outcome for a size-n sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub n: u64,
    /// N_1..N_M with N_M > 0.
    pub counts: Vec<u64>,
    /// Ĝ_1..Ĝ_n.
    pub gaps: Vec<u64>,
    /// Q̂_0..Q̂_{M-1}; nondecreasing, ends at n.
    pub reversed_tail_counts: Vec<u64>,
}

impl Configuration {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        let gaps = gaps_from_counts(&counts, n)?;
        let reversed_tail_counts = reversed_tail_counts(&counts);
        Ok(Configuration { n, counts, gaps, reversed_tail_counts })
    }

    pub fn from_gaps(gaps: Vec<u64>) -> Result<Self> {
        let n = gaps.len() as u64;
        let counts = counts_from_gaps(&gaps, n)?;
        let reversed_tail_counts = reversed_tail_counts(&counts);
        Ok(Configuration { n, counts, gaps, reversed_tail_counts })
    }

    /// M_n, the index of the highest occupied box.
    pub fn m_max(&self) -> usize {
        self.counts.len()
    }

    /// Q*_k: balls strictly beyond box k, for k = 0..=M.
    pub fn tail_counts(&self) -> Vec<u64> {
        tail_counts_from_reversed(&self.reversed_tail_counts)
    }

    pub fn statistics(&self, j_max: usize) -> SampleStatistics {
        sample_statistics(self, j_max)
    }
}

/// Small-count statistics of a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleStatistics {
    /// Number of balls tied at the maximum, N_{M_n}.
    pub l_n: u64,
    /// Empty boxes below the maximum.
    pub k0: u64,
    /// k[j-1] = number of boxes holding exactly j balls, j = 1..=J.
    pub k: Vec<u64>,
}

/// L_n, K_{0:n} and K_{j:n} for j = 1..=j_max.
pub fn sample_statistics(config: &Configuration, j_max: usize) -> SampleStatistics {
    let mut k = vec![0u64; j_max];
    let mut k0 = 0;
    for &c in &config.counts {
        if c == 0 {
            k0 += 1;
        } else if (c as usize) <= j_max {
            k[c as usize - 1] += 1;
        }
    }
    SampleStatistics { l_n: *config.counts.last().unwrap_or(&0), k0, k }
}

/// L_n read from the gaps: the first positive gap index, or n if none is.
pub fn l_n_from_gaps(gaps: &[u64]) -> u64 {
    gaps.iter().position(|&g| g > 0).map_or(gaps.len(), |i| i + 1) as u64
}

/// K_{0:n} read from the gaps. Every gap Ĝ_i with i < n contributes
/// Ĝ_i - 1 empty boxes, but Ĝ_n counts the empty boxes below the minimum in
/// full because no occupied box closes it from below.
pub fn k0_from_gaps(gaps: &[u64]) -> u64 {
    let Some((last, rest)) = gaps.split_last() else { return 0 };
    rest.iter().map(|&g| g.saturating_sub(1)).sum::<u64>() + last
}

pub(crate) fn check_counts(counts: &[u64]) -> Result<u64> {
    match counts.last() {
        None => Err(invalid_arg("count vector is empty")),
        Some(0) => Err(invalid_arg("last count must be positive")),
        Some(_) => Ok(counts.iter().sum()),
    }
}
