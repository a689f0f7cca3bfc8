//! Order-preserving parallel map on a bounded worker pool.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;

/// Worker count when none is configured.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn panic_text(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".into()
    }
}

/// Applies `f` to every item on at most `workers` threads. Output order
/// matches input order and a panicking item only affects its own slot.
pub fn par_map<T, R, F>(workers: usize, items: &[T], f: F) -> Vec<Result<R, String>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let guarded = |item: &T| catch_unwind(AssertUnwindSafe(|| f(item))).map_err(panic_text);
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(guarded).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(guarded).collect()),
        Err(_) => items.iter().map(guarded).collect(),
    }
}
