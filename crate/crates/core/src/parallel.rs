//! Data-parallel map over independent runs.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] fans work out
//! on the rayon pool; without it every request degrades to the sequential
//! loop. Results always come back in index order, so seeded sweeps are
//! reproducible regardless of the execution mode.

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this mode actually runs in parallel in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Like [`Execution::map`], returning the first error by index.
    pub fn try_map<T, F>(self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (`None` keeps the global
/// pool). Without the `parallel` feature this just calls `f`.
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => return pool.install(f),
            Err(_) => return f(),
        }
    }
    let _ = threads;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let seq = Execution::Sequential.map(257, |i| i * i);
        let par = Execution::Parallel.map(257, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[16], 256);
    }

    #[test]
    fn try_map_reports_errors() {
        let out = Execution::default().try_map(10, |i| {
            if i == 7 {
                Err(crate::Error::invalid("seven"))
            } else {
                Ok(i)
            }
        });
        assert!(out.is_err());
    }

    #[test]
    fn dedicated_pool() {
        let v = with_threads(Some(2), || Execution::Parallel.map(10, |i| i + 1));
        assert_eq!(v.iter().sum::<usize>(), 55);
    }
}
