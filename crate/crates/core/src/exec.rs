//! Data-parallel execution helpers. With the `parallel` feature (default)
//! these dispatch to rayon; without it they fall back to plain iterators.
//! The `_seq` variants are always sequential and always available, so the
//! two paths can be compared directly (see the criterion benches).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map_collect_seq<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    map_collect_seq(items, f)
}

#[cfg(feature = "parallel")]
pub(crate) fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Sum of `f(trial)` over `0..trials`, merging count vectors element-wise.
pub(crate) fn sum_counts_seq(trials: usize, width: usize, f: impl Fn(usize, &mut [u64])) -> Vec<u64> {
    let mut acc = vec![0u64; width];
    for t in 0..trials {
        f(t, &mut acc);
    }
    acc
}

#[cfg(feature = "parallel")]
pub(crate) fn sum_counts<F>(trials: usize, width: usize, f: F) -> Vec<u64>
where
    F: Fn(usize, &mut [u64]) + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; width],
            |mut acc, t| {
                f(t, &mut acc);
                acc
            },
        )
        .reduce(
            || vec![0u64; width],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn sum_counts<F>(trials: usize, width: usize, f: F) -> Vec<u64>
where
    F: Fn(usize, &mut [u64]),
{
    sum_counts_seq(trials, width, f)
}

#[cfg(feature = "parallel")]
pub(crate) fn sort_keyed<T: Send>(
    items: &mut [T],
    cmp: impl Fn(&T, &T) -> std::cmp::Ordering + Sync,
) {
    if items.len() >= 4096 {
        items.par_sort_unstable_by(|a, b| cmp(a, b));
    } else {
        items.sort_unstable_by(|a, b| cmp(a, b));
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn sort_keyed<T>(items: &mut [T], cmp: impl Fn(&T, &T) -> std::cmp::Ordering) {
    items.sort_unstable_by(|a, b| cmp(a, b));
}
