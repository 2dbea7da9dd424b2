//! Deterministic parallel maps over independent work items.
//!
//! Results are collected in index order, so output bytes never depend on
//! thread scheduling.

use rayon::prelude::*;

use crate::error::Result;

/// Applies `f` to `0..len` in parallel and collects results in order,
/// stopping at the first error.
pub fn try_map_indexed<T: Send>(
    len: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..len).into_par_iter().map(f).collect()
}
