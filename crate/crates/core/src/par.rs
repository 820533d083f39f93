//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the hot loops fan out over rayon;
//! without it the same call sites run sequentially. Callers that need
//! deterministic output sort after collecting.

#[cfg(feature = "parallel")]
pub(crate) fn par_flat_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Vec<U> + Sync,
{
    use rayon::prelude::*;
    items.par_iter().flat_map_iter(|t| f(t)).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_flat_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> Vec<U>,
{
    items.iter().flat_map(|t| f(t)).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn par_all<T, F>(items: &[T], f: F) -> bool
where
    T: Sync,
    F: Fn(&T) -> bool + Sync,
{
    use rayon::prelude::*;
    items.par_iter().all(|t| f(t))
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_all<T, F>(items: &[T], f: F) -> bool
where
    F: Fn(&T) -> bool,
{
    items.iter().all(|t| f(t))
}

/// Caps the global worker pool. No-op without the `parallel` feature or if
/// a pool already exists.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_n: usize) {}
