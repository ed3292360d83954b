//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature the work is spread over the rayon pool when
//! the caller asks for it; otherwise (or without the feature) it runs on the
//! calling thread. Output order always matches input order.

use crate::error::Result;

pub(crate) fn map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

pub(crate) fn try_map<T, R, F>(items: &[T], parallel: bool, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    map(items, parallel, f).into_iter().collect()
}

/// Whether the parallel code path is compiled in.
pub const fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}
