//! Compensated summation with a deterministic parallel reduction.
//!
//! Energy sums and quadratures must produce bit-identical results
//! regardless of the rayon thread count. Terms are processed in fixed
//! consecutive chunks, each chunk is accumulated sequentially with Kahan
//! compensation, and the per-chunk partial sums are combined in chunk
//! order on a single thread.

use rayon::prelude::*;

use crate::Result;

/// Kahan compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Terms per chunk. Fixed so that the chunk boundaries, and hence the
/// floating-point result, do not depend on the thread count.
const CHUNK: usize = 1024;

/// Sums `term(i)` for `i in 0..n` deterministically, evaluating chunks
/// in parallel. The fallible term function short-circuits on the error
/// with the smallest index.
pub fn deterministic_sum<F>(n: usize, term: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<Result<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = KahanSum::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc.add(term(i)?);
            }
            Ok(acc.value())
        })
        .collect();

    let mut total = KahanSum::new();
    for partial in partials {
        total.add(partial?);
    }
    Ok(total.value())
}
