//! Worker-count contract for data-parallel sections.

use std::fmt;

use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

/// A fixed number of workers. One worker runs everything on the calling
/// thread; more workers run inside a dedicated thread pool.
pub struct Workers {
    count: usize,
    pool: Option<ThreadPool>,
}

impl Workers {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        let pool = if count > 1 {
            Some(ThreadPoolBuilder::new().num_threads(count).build()?)
        } else {
            None
        };
        Ok(Self { count, pool })
    }

    pub fn sequential() -> Self {
        Self {
            count: 1,
            pool: None,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_parallel(&self) -> bool {
        self.pool.is_some()
    }

    /// Runs `f` with this pool as the current rayon pool.
    pub fn install<R, F>(&self, f: F) -> R
    where
        R: Send,
        F: FnOnce() -> R + Send,
    {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    /// Items per chunk when splitting `len` items evenly across workers.
    pub(crate) fn chunk_len(&self, len: usize) -> usize {
        len.div_ceil(self.count).max(1)
    }
}

impl fmt::Debug for Workers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Workers").field("count", &self.count).finish()
    }
}

/// Logical CPUs available to this process.
pub fn available_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
