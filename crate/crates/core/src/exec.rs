//! Execution mode for the data-parallel loops.
//!
//! Every parallel loop in the crate is an indexed map or a chunked reduction
//! whose combination order is fixed, so `Sequential` and `Parallel` produce
//! bit-identical results. Without the `parallel` feature, `Parallel` runs
//! sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for deterministic reductions.
pub(crate) const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `(0..n).map(f).collect()`, in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Fallible variant of [`Exec::map`]; the first error in index order wins.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }

    /// Sum of `f(x)` over `xs`: compensated sums over fixed chunks, combined
    /// sequentially.
    pub fn sum_by<F>(self, xs: &[f64], f: F) -> f64
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let chunks = xs.len().div_ceil(CHUNK);
        let partial = if chunks <= 1 {
            vec![crate::numeric::neumaier(xs.iter().map(|&x| f(x)))]
        } else {
            self.map(chunks, |c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(xs.len());
                crate::numeric::neumaier(xs[lo..hi].iter().map(|&x| f(x)))
            })
        };
        crate::numeric::neumaier(partial.into_iter())
    }
}
