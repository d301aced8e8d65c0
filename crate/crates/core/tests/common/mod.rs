//! Independent oracles shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use perf_charter_core::model::Job;
use perf_charter_core::sched::ClusterSpec;
use rand::Rng;

/// Speedups that divide multiples of 120 exactly, so runtimes are integers
/// and makespans can be compared with `==`.
pub const EXACT_SPEEDUPS: [f64; 8] = [1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 3.75, 4.0];

/// Random instance with `n ≤ max_jobs`, `P ≤ max_gpus` and widths ⊆ {1,2,4}.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    max_jobs: usize,
    max_gpus: u32,
) -> (Vec<Job>, ClusterSpec) {
    let gpus = rng.gen_range(1..=max_gpus);
    let widths: Vec<u32> = [1, 2, 4].into_iter().filter(|&w| w <= gpus).collect();
    let n = rng.gen_range(1..=max_jobs);
    let jobs = (0..n)
        .map(|i| {
            let t1 = 120.0 * f64::from(rng.gen_range(1..=8u32));
            let mut speedups = Vec::new();
            for &w in &widths[1..] {
                if rng.gen_bool(0.75) {
                    let hi = EXACT_SPEEDUPS
                        .iter()
                        .filter(|&&s| s <= f64::from(w))
                        .count();
                    speedups.push((w, EXACT_SPEEDUPS[rng.gen_range(0..hi)]));
                }
            }
            Job::new(format!("j{i}"), t1, speedups).unwrap()
        })
        .collect();
    (jobs, ClusterSpec::new(gpus, widths).unwrap())
}

/// Minimum makespan by enumerating every width assignment and every job
/// order, placing each job at its earliest feasible start given all earlier
/// placements (serial schedule generation). Some order yields an optimal
/// active schedule, so the minimum over all of them is the optimum.
pub fn brute_force_makespan(jobs: &[Job], cluster: &ClusterSpec) -> f64 {
    let n = jobs.len();
    if n == 0 {
        return 0.0;
    }
    let options: Vec<Vec<(u32, f64)>> = jobs
        .iter()
        .map(|j| {
            cluster
                .allowed_widths()
                .iter()
                .filter_map(|&w| j.speedup(w).map(|s| (w, j.t1_minutes() / s)))
                .collect()
        })
        .collect();
    let mut best = f64::INFINITY;
    let mut choice = vec![0usize; n];
    loop {
        let picked: Vec<(u32, f64)> = (0..n).map(|j| options[j][choice[j]]).collect();
        for order in permutations(n) {
            best = best.min(serial_sgs(&picked, &order, cluster.gpu_count()));
        }
        let mut j = n;
        loop {
            if j == 0 {
                return best;
            }
            j -= 1;
            choice[j] += 1;
            if choice[j] < options[j].len() {
                break;
            }
            choice[j] = 0;
        }
    }
}

fn serial_sgs(jobs: &[(u32, f64)], order: &[usize], gpus: u32) -> f64 {
    // (start, end, width)
    let mut placed: Vec<(f64, f64, u32)> = Vec::new();
    for &j in order {
        let (w, r) = jobs[j];
        let usage = |t: f64, placed: &[(f64, f64, u32)]| -> u32 {
            placed
                .iter()
                .filter(|&&(s, e, _)| s <= t && t < e)
                .map(|&(_, _, w)| w)
                .sum()
        };
        let mut candidates: Vec<f64> = std::iter::once(0.0)
            .chain(placed.iter().map(|&(_, e, _)| e))
            .collect();
        candidates.sort_by(f64::total_cmp);
        let start = candidates
            .into_iter()
            .find(|&t| {
                // Usage only rises at starts, so checking t and every start
                // inside the window covers the whole interval.
                std::iter::once(t)
                    .chain(
                        placed
                            .iter()
                            .map(|&(s, _, _)| s)
                            .filter(|&s| s > t && s < t + r),
                    )
                    .all(|x| usage(x, &placed) + w <= gpus)
            })
            .expect("the last end is always feasible");
        placed.push((start, start + r, w));
    }
    placed.iter().map(|&(_, e, _)| e).fold(0.0, f64::max)
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Eigenvalues of a symmetric 3×3 matrix from its characteristic cubic,
/// descending (trigonometric solution).
pub fn symmetric_3x3_eigenvalues(a: [[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(|x, y| y.total_cmp(x));
        return d;
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let l2 = 3.0 * q - l1 - l3;
    [l1, l2, l3]
}
