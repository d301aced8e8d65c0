use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::{runtime, ClusterSpec, Placement, RuntimeTable, SchedError, Schedule};
use crate::model::{check_unique_job_names, Job};

/// Event-driven greedy simulation shared by the list scheduler and the
/// permutation search.
///
/// At time 0 and whenever running jobs finish, the priority list is scanned
/// and every unstarted job whose width fits into the currently free GPUs is
/// started. Returns the makespan and, when `record` is set, `(start, end,
/// gpu ids)` per job. Returns infinity as soon as some job would end after
/// `cutoff`.
pub(crate) fn simulate(
    runtimes: &[f64],
    widths: &[u32],
    order: &[usize],
    gpu_count: u32,
    cutoff: f64,
    mut record: Option<&mut Vec<(f64, f64, Vec<u32>)>>,
) -> f64 {
    let n = order.len();
    let mut started = vec![false; runtimes.len()];
    let mut free_gpus: Vec<bool> = vec![true; gpu_count as usize];
    let mut free = gpu_count;
    // (end, job)
    let mut running: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut gpu_of: Vec<Vec<u32>> = if record.is_some() {
        vec![Vec::new(); runtimes.len()]
    } else {
        Vec::new()
    };
    let mut remaining = n;
    let mut now = 0.0;
    let mut makespan = 0.0f64;

    while remaining > 0 {
        for &j in order {
            if started[j] || widths[j] > free {
                continue;
            }
            started[j] = true;
            remaining -= 1;
            free -= widths[j];
            let end = now + runtimes[j];
            running.push((end, j));
            if end > cutoff {
                return f64::INFINITY;
            }
            makespan = makespan.max(end);
            if let Some(rec) = record.as_deref_mut() {
                let mut ids = Vec::with_capacity(widths[j] as usize);
                for (g, f) in free_gpus.iter_mut().enumerate() {
                    if ids.len() == widths[j] as usize {
                        break;
                    }
                    if *f {
                        *f = false;
                        ids.push(g as u32);
                    }
                }
                rec[j] = (now, end, ids.clone());
                gpu_of[j] = ids;
            }
            if free == 0 {
                break;
            }
        }
        if remaining == 0 {
            break;
        }
        // Jump to the next completion and release everything ending then.
        let next = running
            .iter()
            .map(|&(e, _)| e)
            .fold(f64::INFINITY, f64::min);
        debug_assert!(next.is_finite(), "unstarted job wider than the node");
        now = next;
        running.retain(|&(e, j)| {
            if e <= now {
                free += widths[j];
                if !gpu_of.is_empty() {
                    for &g in &gpu_of[j] {
                        free_gpus[g as usize] = true;
                    }
                }
                false
            } else {
                true
            }
        });
    }
    makespan
}

pub(crate) fn build(
    jobs: &[Job],
    widths: &[u32],
    order: &[usize],
    runtimes: &[f64],
    gpu_count: u32,
) -> Schedule {
    let mut rec = vec![(0.0, 0.0, Vec::new()); jobs.len()];
    let makespan = simulate(
        runtimes,
        widths,
        order,
        gpu_count,
        f64::INFINITY,
        Some(&mut rec),
    );
    let placements = jobs
        .iter()
        .zip(widths)
        .zip(rec)
        .map(|((job, &width), (start, end, gpu_ids))| Placement {
            job: job.name().to_string(),
            width,
            gpu_ids,
            start,
            end,
        })
        .collect();
    Schedule {
        gpu_count,
        placements,
        makespan,
    }
}

pub(crate) fn schedule_from_order(
    jobs: &[Job],
    widths: &[u32],
    order: &[usize],
    cluster: &ClusterSpec,
) -> Result<Schedule, SchedError> {
    let runtimes = jobs
        .iter()
        .zip(widths)
        .map(|(j, &w)| {
            if cluster.allowed_widths().contains(&w) {
                runtime(j, w)
            } else {
                Err(SchedError::UnsupportedWidth {
                    job: j.name().to_string(),
                    width: w,
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(build(jobs, widths, order, &runtimes, cluster.gpu_count()))
}

/// Greedy list schedule: `jobs` are in priority order and `widths[i]` is the
/// width of `jobs[i]`. GPUs are handed out lowest index first.
pub fn list_schedule(
    jobs: &[Job],
    widths: &[u32],
    cluster: &ClusterSpec,
) -> Result<Schedule, SchedError> {
    check_unique_job_names(jobs)?;
    if widths.len() != jobs.len() {
        return Err(SchedError::WidthCountMismatch {
            widths: widths.len(),
            jobs: jobs.len(),
        });
    }
    let order: Vec<usize> = (0..jobs.len()).collect();
    schedule_from_order(jobs, widths, &order, cluster)
}

/// Cheap polynomial-time schedule: list scheduling under a handful of width
/// policies, keeping the shortest.
///
/// The candidates are: every job at the widest allowed width in input order
/// (the naive schedule), and for each allowed width `w` every job at its
/// widest usable width not above `w`, prioritized longest runtime first.
pub fn heuristic_schedule(jobs: &[Job], cluster: &ClusterSpec) -> Result<Schedule, SchedError> {
    let table = RuntimeTable::new(jobs, cluster)?;
    let n = jobs.len();
    let max_w = cluster.max_width();
    let mut best: Option<Schedule> = None;
    let mut consider = |s: Schedule| {
        if best.as_ref().is_none_or(|b| s.makespan < b.makespan) {
            best = Some(s);
        }
    };

    if table.widths.iter().all(|ws| ws.contains(&max_w)) {
        let widths = vec![max_w; n];
        let order: Vec<usize> = (0..n).collect();
        consider(schedule_from_order(jobs, &widths, &order, cluster)?);
    }
    for &cap in cluster.allowed_widths() {
        let mut widths = Vec::with_capacity(n);
        let mut times = Vec::with_capacity(n);
        for (ws, rs) in table.widths.iter().zip(&table.runtimes) {
            let k = ws
                .iter()
                .rposition(|&w| w <= cap)
                .expect("width 1 always usable");
            widths.push(ws[k]);
            times.push(rs[k]);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| times[b].total_cmp(&times[a]).then(a.cmp(&b)));
        consider(build(jobs, &widths, &order, &times, cluster.gpu_count()));
    }
    Ok(best.expect("at least one candidate"))
}
