//! Worker-count policy and the multi-threaded permutation search.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use perf_charter_core::model::Job;
use perf_charter_core::sched::{
    ClusterSpec, PartitionResult, PermutationSearch, SchedError, Schedule,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PERF_CHARTER_THREADS";

/// Worker count from the value of [`THREADS_ENV`]: a positive integer, or the
/// hardware parallelism when unset.
pub fn threads_from(value: Option<&str>) -> Result<usize, String> {
    match value.map(str::trim) {
        None | Some("") => Ok(thread::available_parallelism().map_or(1, NonZeroUsize::get)),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            )),
        },
    }
}

/// Worker count for this process.
pub fn worker_count() -> Result<usize, String> {
    threads_from(std::env::var(THREADS_ENV).ok().as_deref())
}

/// [`perf_charter_core::sched::permutation_search`] with partitions spread
/// over `threads` workers. The result does not depend on `threads`.
pub fn permutation_search_parallel(
    jobs: &[Job],
    cluster: &ClusterSpec,
    limit: usize,
    threads: usize,
) -> Result<(Schedule, u64), SchedError> {
    let search = PermutationSearch::new(jobs, cluster, limit)?;
    let parts = search.partitions();
    let workers = threads.clamp(1, parts.max(1));
    let next = AtomicUsize::new(0);
    let results: Vec<PartitionResult> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let p = next.fetch_add(1, Ordering::Relaxed);
                        if p >= parts {
                            break mine;
                        }
                        mine.push(search.run_partition(p));
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("search worker panicked"))
            .collect()
    });
    Ok(search.finish(&results))
}
