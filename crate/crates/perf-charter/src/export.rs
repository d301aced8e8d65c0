//! JSON and CSV report files. Numbers keep full precision; non-finite values
//! are written as JSON `null`.

use perf_charter_core::cluster::{Cluster, Dendrogram, Linkage, SubsetReport};
use perf_charter_core::model::MetricName;
use perf_charter_core::roofline::{Boundedness, RooflinePoint};
use perf_charter_core::sched::Schedule;
use perf_charter_core::stats::{dominant_metric, PcaModel};
use perf_charter_core::Matrix;
use serde::Serialize;
use serde_json::{Map, Value};

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter_rows().map(<[f64]>::to_vec).collect()
}

fn names(metrics: &[MetricName]) -> Vec<String> {
    metrics.iter().map(|m| m.to_string()).collect()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Dominant {
    pc: usize,
    metric: String,
    loading: f64,
}

#[derive(Serialize)]
struct PcaFile {
    workloads: Vec<String>,
    metrics: Vec<String>,
    dropped_incomplete: Vec<String>,
    dropped_constant: Vec<String>,
    means: Vec<f64>,
    stds: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Row `i` holds metric `i`'s loading on every component.
    eigenvectors: Vec<Vec<f64>>,
    explained: Vec<f64>,
    cumulative_explained: Vec<f64>,
    projections: Vec<Vec<f64>>,
    dominant_metrics: Vec<Dominant>,
}

/// `pca.json`. `incomplete` lists metrics dropped at ingestion.
pub fn pca_json(model: &PcaModel, incomplete: &[MetricName]) -> String {
    let dominant_metrics = (0..model.n_components())
        .map(|k| {
            let (metric, loading) = dominant_metric(model, k).expect("component in range");
            Dominant {
                pc: k + 1,
                metric: metric.to_string(),
                loading,
            }
        })
        .collect();
    to_json(&PcaFile {
        workloads: model.workload_names.clone(),
        metrics: names(model.metric_names()),
        dropped_incomplete: names(incomplete),
        dropped_constant: names(&model.dropped),
        means: model.standardization.means.clone(),
        stds: model.standardization.stds.clone(),
        eigenvalues: model.eigenvalues.clone(),
        eigenvectors: rows(&model.eigenvectors),
        explained: model.explained.clone(),
        cumulative_explained: model.cumulative_explained(),
        projections: rows(&model.projections),
        dominant_metrics,
    })
}

#[derive(Serialize)]
struct MergeEntry {
    left: usize,
    right: usize,
    height: f64,
    size: usize,
}

#[derive(Serialize)]
struct CutEntry {
    k: usize,
    threshold: f64,
}

#[derive(Serialize)]
struct DendrogramFile<'a> {
    linkage: &'a str,
    space: &'a str,
    leaves: &'a [String],
    merges: Vec<MergeEntry>,
    cut: CutEntry,
    clusters: Vec<Vec<String>>,
}

/// `dendrogram.json`: tree, the cut that was applied and its clusters.
pub fn dendrogram_json(
    d: &Dendrogram,
    linkage: Linkage,
    space: &str,
    clusters: &[Cluster],
    threshold: f64,
) -> String {
    to_json(&DendrogramFile {
        linkage: linkage.as_str(),
        space,
        leaves: &d.leaves,
        merges: d
            .merges
            .iter()
            .map(|m| MergeEntry {
                left: m.left,
                right: m.right,
                height: m.height,
                size: m.size,
            })
            .collect(),
        cut: CutEntry {
            k: clusters.len(),
            threshold,
        },
        clusters: clusters.iter().map(|c| d.names(c)).collect(),
    })
}

#[derive(Serialize)]
struct ClusterEntry {
    representative: String,
    members: Vec<String>,
}

#[derive(Serialize)]
struct CoverageEntry {
    low_pct: f64,
    high_pct: f64,
    degenerate: bool,
}

#[derive(Serialize)]
struct SubsetFile {
    selected: Vec<String>,
    clusters: Vec<ClusterEntry>,
    coverage: Map<String, Value>,
}

/// `subset_report.json`. `members[i]` are the workloads represented by
/// `report.selected[i]`.
pub fn subset_json(report: &SubsetReport, members: &[Vec<String>]) -> String {
    let coverage = report
        .coverage
        .iter()
        .map(|c| {
            let entry = CoverageEntry {
                low_pct: c.low_pct,
                high_pct: c.high_pct,
                degenerate: c.degenerate,
            };
            (
                c.metric.to_string(),
                serde_json::to_value(entry).expect("serializable"),
            )
        })
        .collect();
    to_json(&SubsetFile {
        selected: report.selected.clone(),
        clusters: report
            .selected
            .iter()
            .zip(members)
            .map(|(r, m)| ClusterEntry {
                representative: r.clone(),
                members: m.clone(),
            })
            .collect(),
        coverage,
    })
}

#[derive(Serialize)]
struct PlacementEntry<'a> {
    job: &'a str,
    width: u32,
    gpu_ids: &'a [u32],
    start: f64,
    end: f64,
}

#[derive(Serialize)]
struct ScheduleFile<'a> {
    gpu_count: u32,
    placements: Vec<PlacementEntry<'a>>,
    makespan_min: f64,
    method: &'a str,
}

/// `schedule.json`.
pub fn schedule_json(schedule: &Schedule, method: &str) -> String {
    to_json(&ScheduleFile {
        gpu_count: schedule.gpu_count,
        placements: schedule
            .placements
            .iter()
            .map(|p| PlacementEntry {
                job: &p.job,
                width: p.width,
                gpu_ids: &p.gpu_ids,
                start: p.start,
                end: p.end,
            })
            .collect(),
        makespan_min: schedule.makespan,
        method,
    })
}

/// `roofline.csv`: `name,intensity,throughput,classification`.
pub fn roofline_csv(points: &[(RooflinePoint, Boundedness)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "intensity", "throughput", "classification"])
        .expect("writing to memory");
    for (p, class) in points {
        w.write_record([
            p.name.as_str(),
            &p.intensity.to_string(),
            &p.throughput.to_string(),
            class.as_str(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing memory")).expect("UTF-8")
}
