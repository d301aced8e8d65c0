//! Agglomerative hierarchical clustering of workloads, dendrogram cuts,
//! representative selection and subset coverage.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::model::{MetricMatrix, MetricName};
use crate::Matrix;

/// Errors from the clustering routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    /// Need at least two points.
    #[error("at least 2 rows are required, got {0}")]
    TooFewRows(usize),
    /// Distance matrix is not square, symmetric, finite and non-negative with
    /// a zero diagonal.
    #[error("invalid distance matrix: {0}")]
    InvalidDistanceMatrix(String),
    /// Label count differs from matrix order.
    #[error("{labels} labels for a {order}x{order} distance matrix")]
    LabelMismatch {
        /// Number of labels.
        labels: usize,
        /// Matrix order.
        order: usize,
    },
    /// `k` outside `1..=n`.
    #[error("k = {k} is outside 1..={n}")]
    KOutOfRange {
        /// Requested cluster count.
        k: usize,
        /// Number of leaves.
        n: usize,
    },
    /// A requested workload is not in the matrix.
    #[error("unknown workload `{0}`")]
    UnknownWorkload(String),
    /// A subset must name at least one workload.
    #[error("subset is empty")]
    EmptySubset,
}

/// Inter-cluster distance rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Linkage {
    /// Minimum pairwise distance.
    Single,
    /// Maximum pairwise distance.
    Complete,
    /// Mean pairwise distance (UPGMA).
    #[default]
    Average,
}

impl Linkage {
    /// Identifier used on the command line and in files.
    pub fn as_str(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" | "avg" | "upgma" => Ok(Linkage::Average),
            other => Err(alloc::format!("unknown linkage `{other}`")),
        }
    }
}

/// One merge step of a dendrogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Smaller node id of the merged pair.
    pub left: usize,
    /// Larger node id of the merged pair.
    pub right: usize,
    /// Linkage distance at which the pair merged.
    pub height: f64,
    /// Leaves under the new node.
    pub size: usize,
}

/// Agglomerative merge tree. Node ids `0..n` are leaves; merge `i` creates
/// node `n + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    /// Leaf labels.
    pub leaves: Vec<String>,
    /// `n − 1` merges in the order they happened.
    pub merges: Vec<Merge>,
}

/// A group of leaf ids, ascending.
pub type Cluster = Vec<usize>;

/// Euclidean distances between the rows of `points`.
pub fn pairwise_distances(points: &Matrix) -> Result<Matrix, ClusterError> {
    let n = points.rows();
    if n < 2 {
        return Err(ClusterError::TooFewRows(n));
    }
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = points
                .row(i)
                .iter()
                .zip(points.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let v = libm::sqrt(s);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}

fn validate_distances(dist: &Matrix) -> Result<(), ClusterError> {
    let n = dist.rows();
    let bad = |msg: String| Err(ClusterError::InvalidDistanceMatrix(msg));
    if dist.cols() != n {
        return bad(alloc::format!("{}x{} is not square", n, dist.cols()));
    }
    let scale = dist.as_slice().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        if dist[(i, i)] != 0.0 {
            return bad(alloc::format!("diagonal entry {i} is {}", dist[(i, i)]));
        }
        for j in 0..n {
            let v = dist[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return bad(alloc::format!("entry ({i},{j}) = {v}"));
            }
            if (v - dist[(j, i)]).abs() > 1e-12 * scale {
                return bad(alloc::format!("asymmetric at ({i},{j})"));
            }
        }
    }
    Ok(())
}

/// Builds a dendrogram by repeatedly merging the closest pair of clusters.
///
/// Cluster distances follow the Lance–Williams updates for `linkage`.
/// Among equally close pairs the one with the smallest smaller id wins, then
/// the smallest larger id.
pub fn agglomerate(
    labels: &[String],
    dist: &Matrix,
    linkage: Linkage,
) -> Result<Dendrogram, ClusterError> {
    validate_distances(dist)?;
    let n = dist.rows();
    if labels.len() != n {
        return Err(ClusterError::LabelMismatch {
            labels: labels.len(),
            order: n,
        });
    }
    if n < 2 {
        return Err(ClusterError::TooFewRows(n));
    }

    let total = 2 * n - 1;
    let mut d = Matrix::zeros(total, total);
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] = dist[(i, j)];
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..(n - 1) {
        // `active` stays sorted ascending, so the first strict minimum found
        // in (a, b) lexicographic order is the tie-break winner.
        let mut best: Option<(usize, usize, f64)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let v = d[(a, b)];
                if best.is_none_or(|(_, _, bv)| v < bv) {
                    best = Some((a, b, v));
                }
            }
        }
        let (a, b, height) = best.expect("at least two active clusters");
        let new = n + step;
        size[new] = size[a] + size[b];
        for &k in active.iter().filter(|&&k| k != a && k != b) {
            let (da, db) = (d[(k, a)], d[(k, b)]);
            let v = match linkage {
                Linkage::Single => da.min(db),
                Linkage::Complete => da.max(db),
                Linkage::Average => {
                    let w =
                        (size[a] as f64 * da + size[b] as f64 * db) / (size[a] + size[b]) as f64;
                    // rounding must not push the mean outside [min, max]
                    w.clamp(da.min(db), da.max(db))
                }
            };
            d[(k, new)] = v;
            d[(new, k)] = v;
        }
        active.retain(|&k| k != a && k != b);
        active.push(new);
        merges.push(Merge {
            left: a,
            right: b,
            height,
            size: size[new],
        });
    }

    Ok(Dendrogram {
        leaves: labels.to_vec(),
        merges,
    })
}

impl Dendrogram {
    /// Number of leaves.
    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    /// Largest merge height (0 for a single leaf).
    pub fn max_height(&self) -> f64 {
        self.merges.iter().fold(0.0, |m, x| m.max(x.height))
    }

    /// Leaf labels of a cluster.
    pub fn names(&self, cluster: &[usize]) -> Vec<String> {
        cluster.iter().map(|&i| self.leaves[i].clone()).collect()
    }

    /// Leaf ids under node `node`, ascending.
    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        let n = self.n_leaves();
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < n {
                out.push(x);
            } else {
                let m = &self.merges[x - n];
                stack.push(m.left);
                stack.push(m.right);
            }
        }
        out.sort_unstable();
        out
    }

    /// Leaf order that draws the tree without crossings (left subtree first).
    pub fn leaf_order(&self) -> Vec<usize> {
        let n = self.n_leaves();
        if self.merges.is_empty() {
            return (0..n).collect();
        }
        let mut out = Vec::with_capacity(n);
        let mut stack = vec![n + self.merges.len() - 1];
        while let Some(x) = stack.pop() {
            if x < n {
                out.push(x);
            } else {
                let m = &self.merges[x - n];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out
    }

    /// Applies the first `count` merges and returns the resulting clusters,
    /// ordered by their smallest leaf id.
    fn clusters_after(&self, count: usize) -> Vec<Cluster> {
        let n = self.n_leaves();
        let mut parent: Vec<usize> = (0..2 * n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, m) in self.merges.iter().take(count).enumerate() {
            let node = n + i;
            let l = find(&mut parent, m.left);
            let r = find(&mut parent, m.right);
            parent[l] = node;
            parent[r] = node;
        }
        let mut groups: Vec<(usize, Cluster)> = Vec::new();
        for leaf in 0..n {
            let root = find(&mut parent, leaf);
            match groups.iter_mut().find(|(r, _)| *r == root) {
                Some((_, g)) => g.push(leaf),
                None => groups.push((root, vec![leaf])),
            }
        }
        groups.into_iter().map(|(_, g)| g).collect()
    }
}

/// Clusters formed by every merge with height strictly below `height`.
pub fn cut(dendrogram: &Dendrogram, height: f64) -> Vec<Cluster> {
    // Heights are non-decreasing for the supported linkages, so the merges
    // below the threshold form a prefix.
    let count = dendrogram
        .merges
        .iter()
        .take_while(|m| m.height < height)
        .count();
    dendrogram.clusters_after(count)
}

/// Exactly `k` clusters, by undoing the last `k − 1` merges. The threshold is
/// the height of the first undone merge (`+∞` for `k = 1`).
pub fn cut_k(dendrogram: &Dendrogram, k: usize) -> Result<(Vec<Cluster>, f64), ClusterError> {
    let n = dendrogram.n_leaves();
    if k == 0 || k > n {
        return Err(ClusterError::KOutOfRange { k, n });
    }
    let applied = n - k;
    let threshold = dendrogram
        .merges
        .get(applied)
        .map_or(f64::INFINITY, |m| m.height);
    Ok((dendrogram.clusters_after(applied), threshold))
}

/// The medoid of each cluster: the member with the smallest sum of distances
/// to the other members. Ties go to the lexicographically smallest label.
pub fn select_representatives(
    clusters: &[Cluster],
    dist: &Matrix,
    labels: &[String],
) -> Vec<String> {
    clusters
        .iter()
        .filter(|c| !c.is_empty())
        .map(|cluster| {
            // Sum in label order so the result does not depend on row order.
            let mut members = cluster.clone();
            members.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
            let mut best: Option<(f64, usize)> = None;
            for &i in &members {
                let s: f64 = members.iter().map(|&j| dist[(i, j)]).sum();
                if best.is_none_or(|(bs, _)| s < bs) {
                    best = Some((s, i));
                }
            }
            labels[best.expect("non-empty cluster").1].clone()
        })
        .collect()
}

/// Position of a subset's metric range inside the full set's range.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCoverage {
    /// Metric.
    pub metric: MetricName,
    /// Subset minimum as a percentage of the full range.
    pub low_pct: f64,
    /// Subset maximum as a percentage of the full range.
    pub high_pct: f64,
    /// The metric is constant over the full set; reported as (0, 100).
    pub degenerate: bool,
}

/// Selected workloads and their per-metric coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetReport {
    /// Workload names in the subset.
    pub selected: Vec<String>,
    /// One entry per metric, in matrix column order.
    pub coverage: Vec<MetricCoverage>,
}

/// Reports, per metric, where the subset's min and max fall within the full
/// set's min–max range, as percentages.
pub fn coverage(full: &MetricMatrix, subset: &[String]) -> Result<SubsetReport, ClusterError> {
    if subset.is_empty() {
        return Err(ClusterError::EmptySubset);
    }
    let rows = subset
        .iter()
        .map(|name| {
            full.workload_index(name)
                .ok_or_else(|| ClusterError::UnknownWorkload(name.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let values = full.values();
    let coverage = full
        .metric_names()
        .iter()
        .enumerate()
        .map(|(j, metric)| {
            let col = values.column(j);
            let lo_all = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi_all = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi_all == lo_all {
                return MetricCoverage {
                    metric: metric.clone(),
                    low_pct: 0.0,
                    high_pct: 100.0,
                    degenerate: true,
                };
            }
            let lo = rows.iter().map(|&i| col[i]).fold(f64::INFINITY, f64::min);
            let hi = rows
                .iter()
                .map(|&i| col[i])
                .fold(f64::NEG_INFINITY, f64::max);
            // Endpoints are exact; rounding must not report 99.999…% for the
            // full set.
            let pct = |x: f64| {
                if x <= lo_all {
                    0.0
                } else if x >= hi_all {
                    100.0
                } else {
                    (100.0 * (x - lo_all) / (hi_all - lo_all)).clamp(0.0, 100.0)
                }
            };
            MetricCoverage {
                metric: metric.clone(),
                low_pct: pct(lo),
                high_pct: pct(hi),
                degenerate: false,
            }
        })
        .collect();
    Ok(SubsetReport {
        selected: subset.to_vec(),
        coverage,
    })
}
