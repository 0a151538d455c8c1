//! First step of every conversion: order the nonzeros by a format-specific key.

use rayon::prelude::*;

/// Returns `(key, element)` pairs sorted by key.
///
/// Keys must be unique, which holds for every key used in this crate because
/// coordinates are unique; an unstable sort is therefore deterministic.
pub(crate) fn sort_by_key<K, F>(len: usize, key: F) -> Vec<(K, usize)>
where
    K: Ord + Copy + Send + Sync,
    F: Fn(usize) -> K + Sync + Send,
{
    let mut pairs: Vec<(K, usize)> = (0..len).into_par_iter().map(|i| (key(i), i)).collect();
    pairs.par_sort_unstable_by_key(|&(k, _)| k);
    pairs
}

/// Like [`sort_by_key`] but over an explicit subset of element indices.
pub(crate) fn sort_subset_by_key<K, F>(elements: &[usize], key: F) -> Vec<(K, usize)>
where
    K: Ord + Copy + Send + Sync,
    F: Fn(usize) -> K + Sync + Send,
{
    let mut pairs: Vec<(K, usize)> = elements.par_iter().map(|&i| (key(i), i)).collect();
    pairs.par_sort_unstable_by_key(|&(k, _)| k);
    pairs
}
