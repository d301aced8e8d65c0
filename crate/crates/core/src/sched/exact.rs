use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::{heuristic_schedule, ClusterSpec, Placement, RuntimeTable, SchedError, Schedule};
use crate::model::Job;

/// Largest job count [`exact_schedule`] accepts.
pub const EXACT_MAX_JOBS: usize = 10;

/// Relative slack when comparing a lower bound against the incumbent, so that
/// rounding in the bound never prunes a strictly better schedule.
const PRUNE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy)]
struct Placed {
    job: usize,
    width: u32,
    start: f64,
    end: f64,
}

struct Search<'t> {
    table: &'t RuntimeTable,
    gpus: f64,
    gpu_count: u32,
    /// Per job: smallest runtime and smallest width × runtime.
    min_time: Vec<f64>,
    min_area: Vec<f64>,
    placed: Vec<Placed>,
    done: Vec<bool>,
    best: f64,
    best_plan: Option<Vec<Placed>>,
}

impl Search<'_> {
    fn lower_bound(&self, makespan: f64, last_start: f64) -> f64 {
        let mut rem_time = 0.0f64;
        let mut rem_area = 0.0;
        for j in 0..self.done.len() {
            if !self.done[j] {
                rem_time = rem_time.max(self.min_time[j]);
                rem_area += self.min_area[j];
            }
        }
        let mut area = 0.0;
        let mut tail = 0.0;
        for p in &self.placed {
            let w = f64::from(p.width);
            area += w * (p.end - p.start);
            tail += w * (p.end - last_start).max(0.0);
        }
        makespan
            .max(last_start + rem_time)
            .max((area + rem_area) / self.gpus)
            .max(last_start + (tail + rem_area) / self.gpus)
    }

    fn dfs(&mut self, makespan: f64) {
        let n = self.done.len();
        if self.placed.len() == n {
            if makespan < self.best {
                self.best = makespan;
                self.best_plan = Some(self.placed.clone());
            }
            return;
        }
        let (last_start, last_job) = self
            .placed
            .last()
            .map_or((0.0, None), |p| (p.start, Some(p.job)));
        if self.lower_bound(makespan, last_start) * (1.0 - PRUNE_SLACK) >= self.best {
            return;
        }

        // Semi-active schedules: every start is 0 or the end of an earlier job.
        let mut starts: Vec<f64> = Vec::with_capacity(self.placed.len() + 1);
        starts.push(0.0);
        starts.extend(self.placed.iter().map(|p| p.end));
        starts.retain(|&s| s >= last_start);
        starts.sort_by(f64::total_cmp);
        starts.dedup();

        for s in starts {
            let busy: u32 = self
                .placed
                .iter()
                .filter(|p| p.end > s)
                .map(|p| p.width)
                .sum();
            let free = self.gpu_count - busy;
            for j in 0..n {
                if self.done[j] || (s == last_start && last_job.is_some_and(|l| j <= l)) {
                    continue;
                }
                // Widest first tends to find short schedules early.
                for k in (0..self.table.widths[j].len()).rev() {
                    let w = self.table.widths[j][k];
                    if w > free {
                        continue;
                    }
                    let end = s + self.table.runtimes[j][k];
                    if end * (1.0 - PRUNE_SLACK) >= self.best {
                        continue;
                    }
                    self.done[j] = true;
                    self.placed.push(Placed {
                        job: j,
                        width: w,
                        start: s,
                        end,
                    });
                    self.dfs(makespan.max(end));
                    self.placed.pop();
                    self.done[j] = false;
                }
            }
        }
    }
}

/// Minimum-makespan schedule by branch and bound over semi-active schedules
/// (each job starts at 0 or when another job ends), at most
/// [`EXACT_MAX_JOBS`] jobs.
///
/// Semi-active schedules include every list schedule as well as schedules
/// that hold a job back while GPUs are free. The incumbent starts at
/// [`heuristic_schedule`] and is only replaced by strictly shorter schedules.
pub fn exact_schedule(jobs: &[Job], cluster: &ClusterSpec) -> Result<Schedule, SchedError> {
    let table = RuntimeTable::new(jobs, cluster)?;
    let n = jobs.len();
    if n > EXACT_MAX_JOBS {
        let orders: f64 = (1..=n).map(|k| k as f64).product();
        let assignments: f64 = table.widths.iter().map(|w| w.len() as f64).product();
        return Err(SchedError::SearchSpaceTooLarge {
            jobs: n,
            limit: EXACT_MAX_JOBS,
            bound: orders * assignments,
        });
    }
    let incumbent = heuristic_schedule(jobs, cluster)?;

    let min_time = table
        .runtimes
        .iter()
        .map(|rs| rs.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let min_area = table
        .widths
        .iter()
        .zip(&table.runtimes)
        .map(|(ws, rs)| {
            ws.iter()
                .zip(rs)
                .map(|(&w, r)| f64::from(w) * r)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut search = Search {
        table: &table,
        gpus: f64::from(cluster.gpu_count()),
        gpu_count: cluster.gpu_count(),
        min_time,
        min_area,
        placed: Vec::with_capacity(n),
        done: vec![false; n],
        best: incumbent.makespan,
        best_plan: None,
    };
    search.dfs(0.0);

    match search.best_plan {
        None => Ok(incumbent),
        Some(plan) => Ok(assign_gpus(jobs, plan, cluster.gpu_count(), search.best)),
    }
}

/// Hands out GPU ids in start order, lowest free id first. `plan` has
/// non-decreasing starts, so capacity at each start implies ids are free.
fn assign_gpus(jobs: &[Job], plan: Vec<Placed>, gpu_count: u32, makespan: f64) -> Schedule {
    let mut owner: Vec<Option<f64>> = vec![None; gpu_count as usize];
    let mut placements: Vec<Option<Placement>> = vec![None; jobs.len()];
    for p in plan {
        let mut ids = Vec::with_capacity(p.width as usize);
        for (g, slot) in owner.iter_mut().enumerate() {
            if ids.len() == p.width as usize {
                break;
            }
            if slot.is_none_or(|end| end <= p.start) {
                *slot = Some(p.end);
                ids.push(g as u32);
            }
        }
        debug_assert_eq!(ids.len(), p.width as usize);
        placements[p.job] = Some(Placement {
            job: jobs[p.job].name().to_string(),
            width: p.width,
            gpu_ids: ids,
            start: p.start,
            end: p.end,
        });
    }
    Schedule {
        gpu_count,
        placements: placements
            .into_iter()
            .map(|p| p.expect("all placed"))
            .collect(),
        makespan,
    }
}
