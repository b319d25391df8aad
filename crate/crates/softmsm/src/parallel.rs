//! Thin data-parallel layer over rayon with a sequential fallback.
//!
//! Compiled without the `parallel` feature, every helper degrades to a plain
//! sequential loop. All helpers preserve input order, so downstream
//! fixed-order reductions produce bit-identical results regardless of thread
//! count.

/// Order-preserving map over a slice.
#[cfg(feature = "parallel")]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Order-preserving map over an index range.
#[cfg(feature = "parallel")]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Runs `f` inside a worker pool of `threads` threads. `threads == 0` keeps
/// the default pool size. Without the `parallel` feature the closure runs on
/// the caller's thread.
#[cfg(feature = "parallel")]
pub fn run_with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("failed to build worker pool");
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn run_with_threads<R>(_threads: usize, f: impl FnOnce() -> R) -> R {
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let out = map_slice(&xs, |v| v * 2);
        assert_eq!(out, xs.iter().map(|v| v * 2).collect::<Vec<_>>());
        let out = map_range(100, |i| i + 1);
        assert_eq!(out, (1..=100).collect::<Vec<_>>());
    }

    #[test]
    fn thread_cap_does_not_change_results() {
        let xs: Vec<f64> = (0..257).map(|i| i as f64 * 0.37).collect();
        let one = run_with_threads(1, || map_slice(&xs, |v| v.sin()));
        let four = run_with_threads(4, || map_slice(&xs, |v| v.sin()));
        assert_eq!(one, four);
    }
}
