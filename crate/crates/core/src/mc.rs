//! Seeded Monte Carlo in fixed-size blocks.
//!
//! Replicate r belongs to block r / BLOCK, and each block draws from its own
//! ChaCha8 stream (seed, stream = block index). Blocks run on a pool of the
//! requested size and are merged in block order, so results depend on the
//! seed alone and never on the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid_arg, Result};

pub const BLOCK: u64 = 1024;

pub type McRng = ChaCha8Rng;

/// The stream for one block.
pub fn block_rng(seed: u64, block: u64) -> McRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Per-replicate results in replicate order.
pub fn run<T, F>(seed: u64, replicates: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut McRng) -> Result<T> + Sync,
{
    let blocks = fold(
        seed,
        replicates,
        workers,
        Vec::new,
        |acc: &mut Vec<T>, rng| {
            acc.push(f(rng)?);
            Ok(())
        },
        |a, b| a.extend(b),
    )?;
    Ok(blocks)
}

/// Folds replicates into per-block accumulators, then merges the blocks in
/// order.
pub fn fold<A, I, S, M>(seed: u64, replicates: u64, workers: usize, init: I, step: S, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &mut McRng) -> Result<()> + Sync,
    M: Fn(&mut A, A),
{
    if workers == 0 {
        return Err(invalid_arg("worker count must be at least 1"));
    }
    let n_blocks = replicates.div_ceil(BLOCK);
    let one_block = |b: u64| -> Result<A> {
        let mut rng = block_rng(seed, b);
        let mut acc = init();
        let end = ((b + 1) * BLOCK).min(replicates);
        for _ in b * BLOCK..end {
            step(&mut acc, &mut rng)?;
        }
        Ok(acc)
    };
    let parts: Vec<Result<A>> = if workers == 1 {
        (0..n_blocks).map(one_block).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| invalid_arg(format!("thread pool: {e}")))?;
        pool.install(|| (0..n_blocks).into_par_iter().map(one_block).collect())
    };
    let mut out = init();
    for p in parts {
        merge(&mut out, p?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn worker_count_does_not_change_results() {
        let draw = |rng: &mut McRng| -> Result<u64> { Ok(rng.random_range(0..1000)) };
        let a = run(9, 5000, 1, draw).unwrap();
        let b = run(9, 5000, 4, draw).unwrap();
        assert_eq!(a.len(), 5000);
        assert_eq!(a, b);
        assert_ne!(a, run(10, 5000, 1, draw).unwrap());
    }

    #[test]
    fn streams_differ_between_blocks() {
        let mut a = block_rng(1, 0);
        let mut b = block_rng(1, 1);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn errors_propagate() {
        let r = run(1, 10, 2, |_| -> Result<u8> { Err(invalid_arg("boom")) });
        assert!(r.is_err());
        assert!(run(1, 10, 0, |_| Ok(())).is_err());
    }
}
