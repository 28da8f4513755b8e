//! Data-parallel helpers. With the `parallel` feature these run on the rayon
//! pool; without it they are plain sequential loops. Output order always
//! follows input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Folds fixed-size chunks independently and merges the partial results
/// in chunk order, so the result does not depend on thread scheduling.
/// `merge` must be associative and `identity` its neutral element.
pub fn map_reduce<T, A, I, M, R>(items: &[T], identity: I, fold: M, merge: R) -> A
where
    T: Sync,
    A: Send,
    I: Fn() -> A + Sync + Send,
    M: Fn(&mut A, &T) + Sync + Send,
    R: Fn(A, A) -> A,
{
    const CHUNK: usize = 256;
    let chunks: Vec<&[T]> = items.chunks(CHUNK).collect();
    let partials = map(&chunks, |chunk| {
        let mut acc = identity();
        for item in *chunk {
            fold(&mut acc, item);
        }
        acc
    });
    partials.into_iter().fold(identity(), merge)
}
