use crate::error::{invalid_arg, Result};

use super::check_counts;

/// Q̂_k = N_{M-k} + ... + N_M for k = 0..M-1.
pub fn reversed_tail_counts(counts: &[u64]) -> Vec<u64> {
    let mut acc = 0;
    counts
        .iter()
        .rev()
        .map(|c| {
            acc += c;
            acc
        })
        .collect()
}

/// Q*_0..Q*_M from Q̂_0..Q̂_{M-1}: the same values read the other way, plus
/// the terminal zero.
pub fn tail_counts_from_reversed(rtc: &[u64]) -> Vec<u64> {
    let mut out: Vec<u64> = rtc.iter().rev().copied().collect();
    out.push(0);
    out
}

/// Ĝ_i = #{k : Q̂_k = i} for i < n, and one less than that for i = n because
/// Q̂ always ends with one copy of n that is not a gap.
pub fn gaps_from_counts(counts: &[u64], n: u64) -> Result<Vec<u64>> {
    let total = check_counts(counts)?;
    if total != n || n == 0 {
        return Err(invalid_arg(format!("counts sum to {total}, expected n = {n} >= 1")));
    }
    let mut gaps = vec![0u64; n as usize];
    for q in reversed_tail_counts(counts) {
        gaps[q as usize - 1] += 1;
    }
    gaps[n as usize - 1] -= 1;
    Ok(gaps)
}

/// Inverse of [`gaps_from_counts`]. Any nonnegative vector of length n is a
/// valid gap vector.
pub fn counts_from_gaps(gaps: &[u64], n: u64) -> Result<Vec<u64>> {
    if gaps.len() as u64 != n || n == 0 {
        return Err(invalid_arg(format!("gap vector has length {}, expected n = {n} >= 1", gaps.len())));
    }
    let boxes: u64 = gaps.iter().sum::<u64>() + 1;
    if boxes > super::BOX_CAP as u64 {
        return Err(crate::error::Error::BoxCapExceeded(super::BOX_CAP));
    }
    let mut counts = Vec::with_capacity(boxes as usize);
    let mut prev = 0u64;
    for (i, &g) in gaps.iter().enumerate() {
        let value = i as u64 + 1;
        let reps = if value == n { g + 1 } else { g };
        for _ in 0..reps {
            counts.push(value - prev);
            prev = value;
        }
    }
    counts.reverse();
    Ok(counts)
}
