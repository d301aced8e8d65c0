use alloc::string::String;

use super::{runtime, Schedule};
use crate::model::Job;

/// Relative tolerance on reported times.
const TIME_TOL: f64 = 1e-9;

/// Why a schedule is invalid.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleViolation {
    /// Placement count differs from the job count.
    #[error("{placements} placements for {jobs} jobs")]
    WrongJobCount {
        /// Placements in the schedule.
        placements: usize,
        /// Jobs given.
        jobs: usize,
    },
    /// Placement `i` is not job `i`.
    #[error("placement {index} is `{found}`, expected `{expected}`")]
    JobOrder {
        /// Position.
        index: usize,
        /// Job found there.
        found: String,
        /// Job expected there.
        expected: String,
    },
    /// GPU ids do not match the width, repeat, or exceed the node.
    #[error("job `{0}` has an invalid GPU set")]
    BadGpuSet(String),
    /// The job has no measured speedup at its width.
    #[error("job `{job}` cannot run on {width} GPU(s)")]
    UnsupportedWidth {
        /// Job name.
        job: String,
        /// Width used.
        width: u32,
    },
    /// Negative start or `end ≠ start + runtime`.
    #[error("job `{0}` has inconsistent times")]
    BadTimes(String),
    /// Two jobs share a GPU at the same time.
    #[error("jobs `{a}` and `{b}` overlap on GPU {gpu}")]
    Overlap {
        /// First job.
        a: String,
        /// Second job.
        b: String,
        /// Shared GPU.
        gpu: u32,
    },
    /// Makespan differs from the latest end.
    #[error("makespan {reported} differs from latest end {actual}")]
    BadMakespan {
        /// Reported value.
        reported: f64,
        /// Latest end time.
        actual: f64,
    },
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Checks `schedule` against `jobs` without trusting any scheduler: every
/// job appears once in input order, GPU sets are valid, durations match the
/// runtime model, no GPU runs two jobs at once, and the makespan is the
/// latest end.
pub fn validate_schedule(schedule: &Schedule, jobs: &[Job]) -> Result<(), ScheduleViolation> {
    if schedule.placements.len() != jobs.len() {
        return Err(ScheduleViolation::WrongJobCount {
            placements: schedule.placements.len(),
            jobs: jobs.len(),
        });
    }
    let mut latest = 0.0f64;
    for (i, (p, job)) in schedule.placements.iter().zip(jobs).enumerate() {
        if p.job != job.name() {
            return Err(ScheduleViolation::JobOrder {
                index: i,
                found: p.job.clone(),
                expected: job.name().into(),
            });
        }
        let mut ids = p.gpu_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != p.gpu_ids.len()
            || ids.len() != p.width as usize
            || ids.iter().any(|&g| g >= schedule.gpu_count)
        {
            return Err(ScheduleViolation::BadGpuSet(p.job.clone()));
        }
        let r = runtime(job, p.width).map_err(|_| ScheduleViolation::UnsupportedWidth {
            job: p.job.clone(),
            width: p.width,
        })?;
        if p.start.is_nan() || p.start < 0.0 || !close(p.end, p.start + r) {
            return Err(ScheduleViolation::BadTimes(p.job.clone()));
        }
        latest = latest.max(p.end);
    }
    let ps = &schedule.placements;
    for a in 0..ps.len() {
        for b in a + 1..ps.len() {
            let (x, y) = (&ps[a], &ps[b]);
            if x.start < y.end && y.start < x.end {
                if let Some(&g) = x.gpu_ids.iter().find(|g| y.gpu_ids.contains(g)) {
                    return Err(ScheduleViolation::Overlap {
                        a: x.job.clone(),
                        b: y.job.clone(),
                        gpu: g,
                    });
                }
            }
        }
    }
    if schedule.makespan != latest {
        return Err(ScheduleViolation::BadMakespan {
            reported: schedule.makespan,
            actual: latest,
        });
    }
    Ok(())
}
