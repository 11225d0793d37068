//! Thin switch between rayon and sequential iteration. Results are always
//! collected in input order, so output does not depend on thread count.

#[cfg(feature = "parallel")]
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sets the worker count for parallel sections; `0` keeps the default.
/// Has no effect after the first parallel section has run.
#[cfg(feature = "parallel")]
pub fn set_threads(n: usize) -> crate::Result<()> {
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| crate::Error::resource(format!("thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
pub fn set_threads(_n: usize) -> crate::Result<()> {
    Ok(())
}
