//! Deterministic data-parallel helpers.
//!
//! Reductions are computed over fixed-size chunks whose partial results are
//! combined sequentially in index order, so every reported number is
//! independent of the worker-thread count. With the `parallel` feature
//! disabled the same chunking runs on one thread.

/// Chunk length for deterministic reductions. Fixed so the floating-point
/// summation order never depends on scheduling.
pub const CHUNK: usize = 4096;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sum `f(i)` over `0..len` with a deterministic combination order.
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks = len.div_ceil(CHUNK);
    let partial = |b: usize| {
        let lo = b * CHUNK;
        let hi = (lo + CHUNK).min(len);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<f64> = (0..blocks).into_par_iter().map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<f64> = (0..blocks).map(partial).collect();
    parts.into_iter().sum()
}

/// Maximum of `f(i)` over `0..len` (0.0 for empty input).
pub fn max_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks = len.div_ceil(CHUNK);
    let partial = |b: usize| {
        let lo = b * CHUNK;
        let hi = (lo + CHUNK).min(len);
        let mut acc = 0.0f64;
        for i in lo..hi {
            acc = acc.max(f(i));
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<f64> = (0..blocks).into_par_iter().map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<f64> = (0..blocks).map(partial).collect();
    parts.into_iter().fold(0.0, f64::max)
}

/// Accumulate a `dim`-component sum: `f(i, acc)` adds mode `i`'s
/// contribution into `acc`. Chunk partials are combined in index order.
pub fn sum_accumulate<F>(len: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let blocks = len.div_ceil(CHUNK);
    let partial = |b: usize| {
        let lo = b * CHUNK;
        let hi = (lo + CHUNK).min(len);
        let mut acc = vec![0.0; dim];
        for i in lo..hi {
            f(i, &mut acc);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Vec<f64>> = (0..blocks).into_par_iter().map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Vec<f64>> = (0..blocks).map(partial).collect();
    let mut total = vec![0.0; dim];
    for p in parts {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Apply `f(i, &mut x[i])` to every element, in parallel when enabled.
pub fn for_each_mut<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(CHUNK).enumerate().for_each(|(b, chunk)| {
        let base = b * CHUNK;
        for (off, x) in chunk.iter_mut().enumerate() {
            f(base + off, x);
        }
    });
    #[cfg(not(feature = "parallel"))]
    for (i, x) in data.iter_mut().enumerate() {
        f(i, x);
    }
}

/// Apply `f(i, &mut a[i], &mut b[i])` to paired elements of two equal-length
/// slices.
pub fn for_each_zip_mut<T, U, F>(a: &mut [T], b: &mut [U], f: F)
where
    T: Send,
    U: Send,
    F: Fn(usize, &mut T, &mut U) + Sync,
{
    assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    a.par_chunks_mut(CHUNK)
        .zip(b.par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(blk, (ca, cb))| {
            let base = blk * CHUNK;
            for (off, (x, y)) in ca.iter_mut().zip(cb.iter_mut()).enumerate() {
                f(base + off, x, y);
            }
        });
    #[cfg(not(feature = "parallel"))]
    for (i, (x, y)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
        f(i, x, y);
    }
}

/// Run independent closures over a slice of items (used to batch FFTs).
pub fn for_each_item<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync,
{
    #[cfg(feature = "parallel")]
    items.par_iter_mut().for_each(|it| f(it));
    #[cfg(not(feature = "parallel"))]
    items.iter_mut().for_each(|it| f(it));
}
