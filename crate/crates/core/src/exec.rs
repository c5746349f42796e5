//! Sequential or data-parallel execution of independent work items.

/// How independent items (trajectories, sweep points) are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool; `None` uses the global pool.
    #[cfg(feature = "parallel")]
    Parallel {
        workers: Option<usize>,
    },
}

// derivable only when the parallel variant is compiled out
#[allow(clippy::derivable_impls)]
impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel { workers: None }
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Parallel when available, with an optional worker count; a count of
    /// one falls back to sequential execution.
    pub fn with_workers(workers: Option<usize>) -> Self {
        if workers == Some(1) {
            return Execution::Sequential;
        }
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel { workers }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = workers;
            Execution::Sequential
        }
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel { workers } => {
                use rayon::prelude::*;
                let run = || (0..n).into_par_iter().map(&f).collect();
                match workers {
                    Some(w) => {
                        match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
                            Ok(pool) => pool.install(run),
                            Err(e) => {
                                log::warn!("could not build a {w}-thread pool ({e}); using the global pool");
                                run()
                            }
                        }
                    }
                    None => run(),
                }
            }
        }
    }
}
