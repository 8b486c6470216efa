//! Ordered map over an index range, on the rayon pool when the `parallel`
//! feature is on and sequential otherwise. Results always come back in index
//! order so reductions over them do not depend on the worker count.

use std::ops::Range;

#[cfg(feature = "parallel")]
pub fn map_range<T, F>(range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<T, F>(range: Range<u64>, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    range.map(f).collect()
}

/// Sequential variant, available regardless of features.
pub fn map_range_seq<T, F>(range: Range<u64>, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    range.map(f).collect()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
