//! Thread-pool selection for the parallel phases.
//!
//! Work is always split into independent tasks whose results are reduced in
//! a fixed order, so the thread count changes speed but never output.

/// Environment variable overriding the number of worker threads.
pub const THREADS_ENV: &str = "DIMREADER_THREADS";

/// Requested worker count, if the environment sets a positive one.
pub fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Run `op` on a pool sized by [`THREADS_ENV`], or on the global pool.
/// Inside an existing pool the work stays there.
pub fn install<R, F>(op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    if rayon::current_thread_index().is_some() {
        return op();
    }
    install_with(thread_count(), op)
}

/// Run `op` on a pool of `threads` workers, or on the global pool.
pub fn install_with<R, F>(threads: Option<usize>, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads.filter(|&n| n > 0) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(op),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                op()
            }
        },
        None => op(),
    }
}
