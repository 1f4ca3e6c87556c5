//! Index-parallel job execution with deterministic result order.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Runs `job(i)` for `i in 0..count` on up to `workers` threads and returns the
/// results in index order. `workers <= 1` runs inline on the calling thread.
pub fn map_indexed<T, F>(workers: usize, count: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if workers <= 1 || count <= 1 {
        return (0..count).map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&job).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_indexed(1, 20, |i| Ok(i * i)).unwrap();
        let par = map_indexed(4, 20, |i| Ok(i * i)).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn errors_propagate() {
        let r: Result<Vec<usize>> = map_indexed(3, 10, |i| {
            if i == 7 {
                Err(Error::InvalidArgument("boom".into()))
            } else {
                Ok(i)
            }
        });
        assert!(r.is_err());
    }
}
