use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::list::{build, simulate};
use super::{heuristic_schedule, ClusterSpec, RuntimeTable, SchedError, Schedule};
use crate::model::Job;

/// Default job-count limit for [`permutation_search`].
pub const DEFAULT_PERMUTATION_LIMIT: usize = 8;

/// Best candidate found in one partition of the search.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    /// Partition index (the job placed first in the priority order).
    pub partition: usize,
    /// Best makespan, `None` if nothing in the partition beat the seed bound.
    pub best: Option<Candidate>,
    /// Candidates simulated.
    pub explored: u64,
}

/// A width assignment with a priority order and its makespan.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Makespan of the list schedule.
    pub makespan: f64,
    /// Width per job, in job input order.
    pub widths: Vec<u32>,
    /// Priority order of job indices.
    pub order: Vec<usize>,
}

impl Candidate {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.makespan
            .total_cmp(&other.makespan)
            .then_with(|| self.widths.cmp(&other.widths))
            .then_with(|| self.order.cmp(&other.order))
    }
}

/// Exhaustive search over width assignments × priority orders of the list
/// scheduler, split into independent partitions by the first job in the
/// priority order so callers can run them in parallel.
///
/// The result does not depend on how partitions are scheduled: among all
/// candidates with the minimum makespan, the one with the lexicographically
/// smallest width vector and then priority order is returned.
#[derive(Debug)]
pub struct PermutationSearch<'a> {
    jobs: &'a [Job],
    cluster: ClusterSpec,
    widths: Vec<Vec<u32>>,
    runtimes: Vec<Vec<f64>>,
    seed: f64,
}

impl<'a> PermutationSearch<'a> {
    /// Prepares a search, refusing more than `limit` jobs.
    pub fn new(jobs: &'a [Job], cluster: &ClusterSpec, limit: usize) -> Result<Self, SchedError> {
        let table = RuntimeTable::new(jobs, cluster)?;
        if jobs.len() > limit {
            let orders: f64 = (1..=jobs.len()).map(|k| k as f64).product();
            let assignments: f64 = table.widths.iter().map(|w| w.len() as f64).product();
            return Err(SchedError::SearchSpaceTooLarge {
                jobs: jobs.len(),
                limit,
                bound: orders * assignments,
            });
        }
        // Every heuristic candidate lies in the search space, so its makespan
        // bounds the optimum from above.
        let seed = heuristic_schedule(jobs, cluster)?.makespan;
        Ok(Self {
            jobs,
            cluster: cluster.clone(),
            widths: table.widths,
            runtimes: table.runtimes,
            seed,
        })
    }

    /// Number of partitions.
    pub fn partitions(&self) -> usize {
        self.jobs.len()
    }

    /// Searches every candidate whose priority order starts with job `p`.
    pub fn run_partition(&self, p: usize) -> PartitionResult {
        let n = self.jobs.len();
        let gpus = self.cluster.gpu_count();
        let mut best: Option<Candidate> = None;
        let mut bound = self.seed;
        let mut explored = 0u64;

        let mut idx = vec![0usize; n];
        let mut widths = vec![0u32; n];
        let mut times = vec![0.0f64; n];
        let mut order: Vec<usize> = Vec::with_capacity(n);
        loop {
            let mut area = 0.0;
            let mut longest = 0.0f64;
            for j in 0..n {
                widths[j] = self.widths[j][idx[j]];
                times[j] = self.runtimes[j][idx[j]];
                area += f64::from(widths[j]) * times[j];
                longest = longest.max(times[j]);
            }
            let lb = longest.max(area / f64::from(gpus));
            let admissible = match best {
                Some(_) => lb < bound,
                None => lb <= bound,
            };
            if admissible {
                order.clear();
                order.push(p);
                order.extend((0..n).filter(|&j| j != p));
                loop {
                    explored += 1;
                    let m = simulate(&times, &widths, &order, gpus, bound, None);
                    let improves = match &best {
                        Some(_) => m < bound,
                        None => m <= bound,
                    };
                    if improves {
                        bound = m;
                        best = Some(Candidate {
                            makespan: m,
                            widths: widths.clone(),
                            order: order.clone(),
                        });
                        if m <= lb {
                            break;
                        }
                    }
                    if !next_permutation(&mut order[1..]) {
                        break;
                    }
                }
            }
            if !advance(&mut idx, &self.widths) {
                break;
            }
        }
        PartitionResult {
            partition: p,
            best,
            explored,
        }
    }

    /// Combines partition results into the final schedule and the total
    /// number of candidates simulated.
    pub fn finish(&self, results: &[PartitionResult]) -> (Schedule, u64) {
        let explored = results.iter().map(|r| r.explored).sum();
        let n = self.jobs.len();
        let winner = results
            .iter()
            .filter_map(|r| r.best.as_ref())
            .min_by(|a, b| a.cmp_key(b));
        let (widths, order) = match winner {
            Some(c) => (c.widths.clone(), c.order.clone()),
            None => (Vec::new(), Vec::new()),
        };
        debug_assert!(
            n == 0 || widths.len() == n,
            "some partition reaches the seed"
        );
        let times: Vec<f64> = widths
            .iter()
            .enumerate()
            .map(|(j, w)| {
                let k = self.widths[j]
                    .iter()
                    .position(|x| x == w)
                    .expect("searched width");
                self.runtimes[j][k]
            })
            .collect();
        (
            build(self.jobs, &widths, &order, &times, self.cluster.gpu_count()),
            explored,
        )
    }
}

/// Odometer over per-job width indices, last job fastest.
fn advance(idx: &mut [usize], widths: &[Vec<u32>]) -> bool {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < widths[j].len() {
            return true;
        }
        idx[j] = 0;
    }
    false
}

/// Next lexicographic permutation; false once the last one was reached.
fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Runs every partition serially. Returns the best schedule and the number
/// of candidates simulated.
pub fn permutation_search(
    jobs: &[Job],
    cluster: &ClusterSpec,
    limit: usize,
) -> Result<(Schedule, u64), SchedError> {
    let search = PermutationSearch::new(jobs, cluster, limit)?;
    let results: Vec<PartitionResult> = (0..search.partitions())
        .map(|p| search.run_partition(p))
        .collect();
    Ok(search.finish(&results))
}
