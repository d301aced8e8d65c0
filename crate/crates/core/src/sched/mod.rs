//! Scheduling of moldable training jobs on a node of identical GPUs.
//!
//! A job's width (GPU count) is chosen once from its measured speedups and
//! never changes; jobs are not preempted. Four strategies are provided:
//!
//! * [`naive_schedule`]: every job in turn on the widest allowed width;
//! * [`list_schedule`]: event-driven greedy placement for a fixed width
//!   assignment and priority order, used by the other two searches;
//! * [`permutation_search`]: exhaustive search over width assignments ×
//!   priority orders of the list scheduler;
//! * [`exact_schedule`]: branch and bound over all semi-active schedules,
//!   a superset of the list schedules.

mod exact;
mod list;
mod search;
mod validate;

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub use exact::{exact_schedule, EXACT_MAX_JOBS};
pub use list::{heuristic_schedule, list_schedule};
pub use search::{
    permutation_search, Candidate, PartitionResult, PermutationSearch, DEFAULT_PERMUTATION_LIMIT,
};
pub use validate::{validate_schedule, ScheduleViolation};

use crate::model::{check_unique_job_names, Job, ModelError};

/// Errors from the schedulers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchedError {
    /// The job has no speedup measured at this width, or the width is not
    /// allowed on the cluster.
    #[error("job `{job}` cannot run on {width} GPU(s)")]
    UnsupportedWidth {
        /// Job name.
        job: String,
        /// Requested width.
        width: u32,
    },
    /// The search would be too expensive; raise the limit to force it.
    #[error("search space too large: {jobs} jobs exceed the limit of {limit} (about {bound:.3e} candidate schedules)")]
    SearchSpaceTooLarge {
        /// Number of jobs.
        jobs: usize,
        /// Job-count limit in force.
        limit: usize,
        /// Size of the search space.
        bound: f64,
    },
    /// Two schedules cover different jobs.
    #[error("schedules cover different job sets")]
    JobSetMismatch,
    /// Cluster description is inconsistent.
    #[error("invalid cluster: {0}")]
    InvalidCluster(String),
    /// Width list and job list differ in length.
    #[error("{widths} widths given for {jobs} jobs")]
    WidthCountMismatch {
        /// Number of widths.
        widths: usize,
        /// Number of jobs.
        jobs: usize,
    },
    /// Invalid job data.
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// GPU count and the widths jobs may use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSpec {
    gpu_count: u32,
    allowed_widths: BTreeSet<u32>,
}

impl ClusterSpec {
    /// Validates `1 ∈ widths` and `max(widths) ≤ gpu_count`.
    pub fn new(
        gpu_count: u32,
        allowed_widths: impl IntoIterator<Item = u32>,
    ) -> Result<Self, SchedError> {
        if gpu_count == 0 {
            return Err(SchedError::InvalidCluster(
                "GPU count must be at least 1".into(),
            ));
        }
        let allowed_widths: BTreeSet<u32> = allowed_widths.into_iter().collect();
        if !allowed_widths.contains(&1) {
            return Err(SchedError::InvalidCluster("width 1 must be allowed".into()));
        }
        if let Some(&w) = allowed_widths.iter().next_back() {
            if w > gpu_count {
                return Err(SchedError::InvalidCluster(alloc::format!(
                    "width {w} exceeds the {gpu_count} available GPUs"
                )));
            }
        }
        Ok(Self {
            gpu_count,
            allowed_widths,
        })
    }

    /// Powers of two up to `gpu_count`.
    pub fn with_default_widths(gpu_count: u32) -> Result<Self, SchedError> {
        let widths = core::iter::successors(Some(1u32), |w| w.checked_mul(2))
            .take_while(|&w| w <= gpu_count.max(1));
        Self::new(gpu_count, widths)
    }

    /// Number of GPUs.
    pub fn gpu_count(&self) -> u32 {
        self.gpu_count
    }

    /// Allowed widths, ascending.
    pub fn allowed_widths(&self) -> &BTreeSet<u32> {
        &self.allowed_widths
    }

    /// Widest allowed width.
    pub fn max_width(&self) -> u32 {
        *self
            .allowed_widths
            .iter()
            .next_back()
            .expect("1 is always allowed")
    }

    /// Widths a job can use here: measured for the job and allowed on the
    /// cluster, ascending.
    pub fn widths_for(&self, job: &Job) -> Vec<u32> {
        job.widths()
            .filter(|w| self.allowed_widths.contains(w))
            .collect()
    }
}

/// One job's slot in a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// Job name.
    pub job: String,
    /// GPU count.
    pub width: u32,
    /// GPUs used, ascending.
    pub gpu_ids: Vec<u32>,
    /// Start, minutes.
    pub start: f64,
    /// End, minutes.
    pub end: f64,
}

/// A complete, timed assignment of jobs to GPUs.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// GPUs on the node.
    pub gpu_count: u32,
    /// Placements in job input order.
    pub placements: Vec<Placement>,
    /// Latest end time (0 for no jobs).
    pub makespan: f64,
}

impl Schedule {
    /// Width chosen for `job`, if it is scheduled.
    pub fn width_of(&self, job: &str) -> Option<u32> {
        self.placements
            .iter()
            .find(|p| p.job == job)
            .map(|p| p.width)
    }

    fn job_names(&self) -> BTreeSet<&str> {
        self.placements.iter().map(|p| p.job.as_str()).collect()
    }
}

/// Minutes to train `job` on `width` GPUs: `t1 / speedup(width)`. No
/// interpolation between measured widths.
pub fn runtime(job: &Job, width: u32) -> Result<f64, SchedError> {
    job.speedup(width)
        .map(|s| job.t1_minutes() / s)
        .ok_or_else(|| SchedError::UnsupportedWidth {
            job: job.name().to_string(),
            width,
        })
}

/// `speedup(width) / width`.
pub fn scaling_efficiency(job: &Job, width: u32) -> Result<f64, SchedError> {
    job.speedup(width)
        .map(|s| s / f64::from(width))
        .ok_or_else(|| SchedError::UnsupportedWidth {
            job: job.name().to_string(),
            width,
        })
}

/// Runs the jobs one after another in input order, each on the widest
/// allowed width.
pub fn naive_schedule(jobs: &[Job], cluster: &ClusterSpec) -> Result<Schedule, SchedError> {
    check_unique_job_names(jobs)?;
    let width = cluster.max_width();
    let mut t = 0.0;
    let mut placements = Vec::with_capacity(jobs.len());
    for job in jobs {
        let r = runtime(job, width)?;
        placements.push(Placement {
            job: job.name().to_string(),
            width,
            gpu_ids: (0..width).collect(),
            start: t,
            end: t + r,
        });
        t += r;
    }
    Ok(Schedule {
        gpu_count: cluster.gpu_count(),
        makespan: t,
        placements,
    })
}

/// Minutes saved by `best` relative to `naive`. Both must schedule the same
/// jobs.
pub fn savings(naive: &Schedule, best: &Schedule) -> Result<f64, SchedError> {
    if naive.placements.len() != best.placements.len() || naive.job_names() != best.job_names() {
        return Err(SchedError::JobSetMismatch);
    }
    Ok(naive.makespan - best.makespan)
}

/// Runtime table `[job][width index]` for the widths each job can use.
pub(crate) struct RuntimeTable {
    pub widths: Vec<Vec<u32>>,
    pub runtimes: Vec<Vec<f64>>,
}

impl RuntimeTable {
    pub fn new(jobs: &[Job], cluster: &ClusterSpec) -> Result<Self, SchedError> {
        check_unique_job_names(jobs)?;
        let mut widths = Vec::with_capacity(jobs.len());
        let mut runtimes = Vec::with_capacity(jobs.len());
        for job in jobs {
            let ws = cluster.widths_for(job);
            let rs = ws
                .iter()
                .map(|&w| runtime(job, w))
                .collect::<Result<Vec<_>, _>>()?;
            widths.push(ws);
            runtimes.push(rs);
        }
        Ok(Self { widths, runtimes })
    }
}
