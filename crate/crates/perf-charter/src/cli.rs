//! Command-line front end.
//!
//! Every command parses all of its inputs and runs the whole analysis before
//! touching the output directory, so a failing run leaves no partial outputs.
//! Exit codes: 0 success, 1 output I/O failure, 2 invalid input or arguments,
//! 3 analysis failure, 4 search space too large.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use perf_charter_core::cluster::{
    agglomerate, coverage, cut, cut_k, pairwise_distances, select_representatives, Linkage,
};
use perf_charter_core::model::{Job, TransactionBytes};
use perf_charter_core::roofline::{
    attainable, classify, kernel_point, workload_point, MachineModel, Precision, RooflinePoint,
};
use perf_charter_core::sched::{
    exact_schedule, heuristic_schedule, naive_schedule, savings, scaling_efficiency,
    validate_schedule, ClusterSpec, SchedError, Schedule, DEFAULT_PERMUTATION_LIMIT,
};
use perf_charter_core::stats::{dominant_metric, fit_pca};

use crate::export;
use crate::ingest::{self, Format, IngestError};
use crate::output::{ensure_dir, write_atomic};
use crate::parallel::{permutation_search_parallel, worker_count};
use crate::svg;
use crate::text::{ascii_gantt, sig6, table};

/// Success.
pub const EXIT_OK: i32 = 0;
/// Writing an output file failed.
pub const EXIT_OUTPUT: i32 = 1;
/// Unreadable or invalid input, or bad arguments.
pub const EXIT_INPUT: i32 = 2;
/// The analysis itself failed.
pub const EXIT_ANALYSIS: i32 = 3;
/// A scheduler refused an oversized search.
pub const EXIT_SEARCH_SPACE: i32 = 4;

/// Default number of representatives when neither `--cut` nor `--k` is given.
pub const DEFAULT_K: usize = 4;

/// Workload characterization, roofline analysis and moldable job scheduling
/// for GPU training benchmarks.
#[derive(Debug, Parser)]
#[command(name = "perf-charter", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// PCA of workload metrics, dendrogram and representative subset.
    Characterize(CharacterizeArgs),
    /// Roofline points for kernel classes or whole workloads.
    Roofline(RooflineArgs),
    /// Naive versus optimized schedule of moldable training jobs.
    Schedule(ScheduleArgs),
    /// All three analyses into one output directory.
    Report(ReportArgs),
}

/// Space the dendrogram is built in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// All standardized metrics.
    Metric,
    /// Scores on the first `k` principal components.
    Pca(usize),
}

impl Space {
    fn label(self) -> String {
        match self {
            Space::Metric => "metric".into(),
            Space::Pca(k) => format!("pca:{k}"),
        }
    }
}

fn parse_space(s: &str) -> Result<Space, String> {
    match s {
        "metric" => Ok(Space::Metric),
        _ => match s.strip_prefix("pca:").map(str::parse::<usize>) {
            Some(Ok(k)) if k > 0 => Ok(Space::Pca(k)),
            _ => Err("expected `metric` or `pca:<k>` with k ≥ 1".into()),
        },
    }
}

fn parse_linkage(s: &str) -> Result<Linkage, String> {
    s.parse()
}

fn parse_widths(s: &str) -> Result<Vec<u32>, String> {
    s.split(',')
        .map(|w| {
            w.trim()
                .parse::<u32>()
                .ok()
                .filter(|&w| w > 0)
                .ok_or_else(|| format!("`{w}` is not a positive width"))
        })
        .collect()
}

fn parse_height(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(h) if !h.is_nan() => Ok(h),
        _ => Err(format!("`{s}` is not a number")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Branch and bound over all semi-active schedules.
    Exact,
    /// Every width assignment × priority order of the list scheduler.
    Permutation,
    /// List scheduling under a few width policies.
    Heuristic,
}

impl Method {
    fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Permutation => "permutation",
            Method::Heuristic => "heuristic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrecisionArg {
    Double,
    Single,
    Half,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Single => Precision::Single,
            PrecisionArg::Half => Precision::Half,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct CharacterizeArgs {
    /// Workload profile table (`name,suite,<metric…>`).
    #[arg(long)]
    profiles: PathBuf,
    /// avg (UPGMA), single or complete.
    #[arg(long, default_value = "average", value_parser = parse_linkage)]
    linkage: Linkage,
    /// Cut the dendrogram at this height.
    #[arg(long, value_parser = parse_height, conflicts_with = "k")]
    cut: Option<f64>,
    /// Cut the dendrogram into this many clusters (default 4).
    #[arg(long)]
    k: Option<usize>,
    /// `metric` or `pca:<k>`.
    #[arg(long, default_value = "metric", value_parser = parse_space)]
    space: Space,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct RooflineArgs {
    /// Kernel table (`class,time_ms,calls,unique,flops,transactions`, optional `workload`).
    #[arg(long)]
    kernels: PathBuf,
    /// Machine description (JSON).
    #[arg(long)]
    machine: PathBuf,
    /// Bytes per memory transaction.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..))]
    transaction_bytes: u32,
    /// Compute ceiling the points are classified against.
    #[arg(long, value_enum, default_value = "single")]
    precision: PrecisionArg,
    /// With a `workload` column, also report every kernel row.
    #[arg(long)]
    per_kernel: bool,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct ScheduleArgs {
    /// Job table (`name,t1_minutes,s2,s4,…`).
    #[arg(long)]
    jobs: PathBuf,
    /// GPUs on the node.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    gpus: u32,
    /// Allowed widths, e.g. `1,2,4` (default: powers of two up to --gpus).
    #[arg(long, value_parser = parse_widths)]
    widths: Option<Vec<u32>>,
    /// Optimizer compared against the naive schedule.
    #[arg(long, value_enum, default_value = "exact")]
    method: Method,
    /// Largest job count the permutation search accepts.
    #[arg(long, default_value_t = DEFAULT_PERMUTATION_LIMIT)]
    limit: usize,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct ReportArgs {
    /// Workload profile table.
    #[arg(long)]
    profiles: PathBuf,
    /// Kernel table.
    #[arg(long)]
    kernels: PathBuf,
    /// Machine description (JSON).
    #[arg(long)]
    machine: PathBuf,
    /// Job table.
    #[arg(long)]
    jobs: PathBuf,
    /// GPUs on the node.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    gpus: u32,
    /// Number of representatives.
    #[arg(long)]
    k: Option<usize>,
    /// Scheduling optimizer.
    #[arg(long, value_enum, default_value = "exact")]
    method: Method,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// A failed command and its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    /// Process exit code.
    pub code: i32,
    /// Message for stderr.
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn analysis(message: impl ToString) -> Self {
        Self {
            code: EXIT_ANALYSIS,
            message: message.to_string(),
        }
    }
}

fn sched_failure(e: SchedError) -> Failure {
    match e {
        SchedError::SearchSpaceTooLarge { .. } => Failure {
            code: EXIT_SEARCH_SPACE,
            message: format!("{e}; pass a larger --limit or use --method heuristic"),
        },
        SchedError::InvalidCluster(_) => Failure::input(e.to_string()),
        _ => Failure::analysis(e),
    }
}

/// Files and the human report produced by a command.
#[derive(Debug, Default)]
struct Artifacts {
    files: Vec<(&'static str, Vec<u8>)>,
    report: String,
    warnings: Vec<String>,
}

impl Artifacts {
    fn extend(&mut self, other: Artifacts) {
        self.files.extend(other.files);
        if !self.report.is_empty() {
            self.report.push('\n');
        }
        self.report.push_str(&other.report);
        self.warnings.extend(other.warnings);
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn ingest_failure(path: &Path) -> impl Fn(IngestError) -> Failure + '_ {
    move |e| Failure::input(format!("{}: {e}", path.display()))
}

fn characterize(
    profiles_path: &Path,
    format: Option<Format>,
    linkage: Linkage,
    cut_height: Option<f64>,
    k: Option<usize>,
    space: Space,
) -> Result<Artifacts, Failure> {
    let mut out = Artifacts::default();
    let text = read_input(profiles_path)?;
    let format = format.unwrap_or_else(|| Format::from_path(profiles_path));
    let parsed = ingest::parse_profiles(&text, format).map_err(ingest_failure(profiles_path))?;
    for m in &parsed.dropped {
        out.warnings.push(format!(
            "metric `{m}` dropped: missing for at least one workload"
        ));
    }
    let matrix = &parsed.matrix;
    let model = fit_pca(matrix).map_err(Failure::analysis)?;
    for m in &model.dropped {
        out.warnings
            .push(format!("metric `{m}` dropped: constant across workloads"));
    }

    let points = match space {
        Space::Metric => model.standardized.clone(),
        Space::Pca(k) => {
            if k > model.n_components() {
                out.warnings.push(format!(
                    "--space pca:{k} exceeds the {} components; using all",
                    model.n_components()
                ));
            }
            model.top_projections(k)
        }
    };
    let names = matrix.workload_names().to_vec();
    let dist = pairwise_distances(&points).map_err(Failure::analysis)?;
    let dendrogram = agglomerate(&names, &dist, linkage).map_err(Failure::analysis)?;
    let (clusters, threshold) = match cut_height {
        Some(h) => (cut(&dendrogram, h), h),
        None => {
            let k = match k {
                Some(k) => k,
                None if names.len() < DEFAULT_K => {
                    out.warnings.push(format!(
                        "only {} workloads; using k = {}",
                        names.len(),
                        names.len()
                    ));
                    names.len()
                }
                None => DEFAULT_K,
            };
            cut_k(&dendrogram, k).map_err(Failure::analysis)?
        }
    };
    let reps = select_representatives(&clusters, &dist, &names);
    let subset = coverage(matrix, &reps).map_err(Failure::analysis)?;
    let members: Vec<Vec<String>> = clusters.iter().map(|c| dendrogram.names(c)).collect();

    out.files.push((
        "pca.json",
        export::pca_json(&model, &parsed.dropped).into_bytes(),
    ));
    out.files.push((
        "dendrogram.json",
        export::dendrogram_json(&dendrogram, linkage, &space.label(), &clusters, threshold)
            .into_bytes(),
    ));
    out.files.push((
        "dendrogram.svg",
        svg::dendrogram_svg(&dendrogram, threshold).into_bytes(),
    ));
    out.files.push((
        "subset_report.json",
        export::subset_json(&subset, &members).into_bytes(),
    ));

    let r = &mut out.report;
    let _ = writeln!(
        r,
        "Workload characterization: {} workloads, {} metrics retained",
        names.len(),
        model.n_components()
    );
    let cumulative = model.cumulative_explained();
    let rows: Vec<Vec<String>> = (0..model.n_components())
        .map(|k| {
            let (metric, loading) = dominant_metric(&model, k).expect("component in range");
            vec![
                format!("PC{}", k + 1),
                sig6(model.eigenvalues[k]),
                format!("{}%", sig6(100.0 * model.explained[k])),
                format!("{}%", sig6(100.0 * cumulative[k])),
                format!("{metric} ({})", sig6(loading)),
            ]
        })
        .collect();
    r.push_str(&table(
        &[
            "component",
            "eigenvalue",
            "explained",
            "cumulative",
            "dominant metric",
        ],
        &rows,
    ));
    let _ = writeln!(
        r,
        "\n{} clusters ({} linkage, {} space, threshold {})",
        clusters.len(),
        linkage.as_str(),
        space.label(),
        sig6(threshold)
    );
    let rows: Vec<Vec<String>> = reps
        .iter()
        .zip(&members)
        .map(|(rep, m)| vec![rep.clone(), m.len().to_string(), m.join(" ")])
        .collect();
    r.push_str(&table(&["representative", "size", "members"], &rows));
    let _ = writeln!(r, "\nSelected subset: {}", reps.join(", "));
    let rows: Vec<Vec<String>> = subset
        .coverage
        .iter()
        .map(|c| {
            vec![
                c.metric.to_string(),
                format!("{}%", sig6(c.low_pct)),
                format!("{}%", sig6(c.high_pct)),
                if c.degenerate {
                    "constant".into()
                } else {
                    String::new()
                },
            ]
        })
        .collect();
    r.push_str(&table(&["metric", "low", "high", "note"], &rows));
    Ok(out)
}

fn roofline(
    kernels_path: &Path,
    machine_path: &Path,
    format: Option<Format>,
    transaction_bytes: u32,
    precision: Precision,
    per_kernel: bool,
) -> Result<Artifacts, Failure> {
    let mut out = Artifacts::default();
    let text = read_input(kernels_path)?;
    let machine_text = read_input(machine_path)?;
    let format = format.unwrap_or_else(|| Format::from_path(kernels_path));
    let rows = ingest::parse_kernels(&text, format).map_err(ingest_failure(kernels_path))?;
    let machine: MachineModel =
        ingest::parse_machine(&machine_text).map_err(ingest_failure(machine_path))?;
    let warnings = machine
        .validate()
        .map_err(|e| Failure::input(format!("{}: {e}", machine_path.display())))?;
    out.warnings
        .extend(warnings.iter().map(|w| format!("machine: {w}")));
    let bytes = TransactionBytes::new(transaction_bytes)
        .ok_or_else(|| Failure::input("--transaction-bytes must be positive"))?;

    // Rows with a workload are aggregated per workload in order of first
    // appearance; rows without one are points of their own.
    let mut points: Vec<RooflinePoint> = Vec::new();
    let mut groups: Vec<(String, Vec<_>)> = Vec::new();
    for row in &rows {
        match &row.workload {
            Some(w) => match groups.iter_mut().find(|(name, _)| name == w) {
                Some((_, records)) => records.push(row.record.clone()),
                None => groups.push((w.clone(), vec![row.record.clone()])),
            },
            None => {
                points.push(kernel_point(&row.record, bytes, precision).map_err(Failure::analysis)?)
            }
        }
    }
    for (name, records) in &groups {
        points.push(
            workload_point(name.clone(), records, bytes, precision).map_err(Failure::analysis)?,
        );
    }
    if per_kernel {
        for row in rows.iter().filter(|r| r.workload.is_some()) {
            let mut p = kernel_point(&row.record, bytes, precision).map_err(Failure::analysis)?;
            p.name = format!("{}/{}", row.workload.as_deref().unwrap_or(""), p.name);
            points.push(p);
        }
    }
    let classified = points
        .into_iter()
        .map(|p| {
            let c = classify(&machine, precision, &p).map_err(Failure::analysis)?;
            Ok((p, c))
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    out.files.push((
        "roofline.csv",
        export::roofline_csv(&classified).into_bytes(),
    ));
    let plain: Vec<RooflinePoint> = classified.iter().map(|(p, _)| p.clone()).collect();
    out.files.push((
        "roofline.svg",
        svg::roofline_svg(&machine, &plain).into_bytes(),
    ));

    let ridge = machine.ridge(precision).map_err(Failure::analysis)?;
    let peak = machine.peak(precision).map_err(Failure::analysis)?;
    let r = &mut out.report;
    let _ = writeln!(
        r,
        "Roofline on {}: {} peak {} GFLOP/s, bandwidth {} GB/s, ridge {} FLOP/B, {} B per transaction",
        machine.name,
        precision,
        sig6(peak),
        sig6(machine.mem_bandwidth_gbps),
        sig6(ridge),
        bytes.get()
    );
    let rows = classified
        .iter()
        .map(|(p, c)| {
            let roof = attainable(&machine, precision, p.intensity).map_err(Failure::analysis)?;
            Ok(vec![
                p.name.clone(),
                sig6(p.intensity),
                sig6(p.throughput),
                sig6(roof),
                c.as_str().to_string(),
            ])
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    r.push_str(&table(
        &["name", "FLOP/B", "GFLOP/s", "attainable", "classification"],
        &rows,
    ));
    Ok(out)
}

fn run_method(
    method: Method,
    jobs: &[Job],
    cluster: &ClusterSpec,
    limit: usize,
    threads: usize,
) -> Result<(Schedule, Option<u64>), Failure> {
    match method {
        Method::Exact => exact_schedule(jobs, cluster).map(|s| (s, None)),
        Method::Heuristic => heuristic_schedule(jobs, cluster).map(|s| (s, None)),
        Method::Permutation => {
            permutation_search_parallel(jobs, cluster, limit, threads).map(|(s, n)| (s, Some(n)))
        }
    }
    .map_err(sched_failure)
}

fn schedule(
    jobs_path: &Path,
    format: Option<Format>,
    gpus: u32,
    widths: Option<&[u32]>,
    method: Method,
    limit: usize,
    threads: usize,
) -> Result<Artifacts, Failure> {
    let mut out = Artifacts::default();
    let text = read_input(jobs_path)?;
    let format = format.unwrap_or_else(|| Format::from_path(jobs_path));
    let jobs = ingest::parse_jobs(&text, format).map_err(ingest_failure(jobs_path))?;
    let cluster = match widths {
        Some(w) => ClusterSpec::new(gpus, w.iter().copied()),
        None => ClusterSpec::with_default_widths(gpus),
    }
    .map_err(sched_failure)?;

    let naive = naive_schedule(&jobs, &cluster).map_err(sched_failure)?;
    let (best, explored) = run_method(method, &jobs, &cluster, limit, threads)?;
    validate_schedule(&best, &jobs)
        .map_err(|e| Failure::analysis(format!("internal error, invalid schedule: {e}")))?;
    let saved = savings(&naive, &best).map_err(sched_failure)?;

    out.files.push((
        "schedule.json",
        export::schedule_json(&best, method.as_str()).into_bytes(),
    ));
    let title = format!(
        "{} schedule on {} GPUs: {} min",
        method.as_str(),
        gpus,
        sig6(best.makespan)
    );
    out.files
        .push(("gantt.svg", svg::gantt_svg(&best, &title).into_bytes()));

    let r = &mut out.report;
    let widths: Vec<String> = cluster
        .allowed_widths()
        .iter()
        .map(u32::to_string)
        .collect();
    let _ = writeln!(
        r,
        "Scheduling {} jobs on {} GPUs (widths {})",
        jobs.len(),
        gpus,
        widths.join(",")
    );
    let _ = writeln!(
        r,
        "naive makespan:       {} min ({} h)",
        sig6(naive.makespan),
        sig6(naive.makespan / 60.0)
    );
    let _ = writeln!(
        r,
        "{:<21} {} min ({} h)",
        format!("{} makespan:", method.as_str()),
        sig6(best.makespan),
        sig6(best.makespan / 60.0)
    );
    let _ = writeln!(
        r,
        "savings:              {} min ({} h)",
        sig6(saved),
        sig6(saved / 60.0)
    );
    if let Some(n) = explored {
        let _ = writeln!(r, "candidates simulated: {n}");
    }
    let rows: Vec<Vec<String>> = best
        .placements
        .iter()
        .zip(&jobs)
        .map(|(p, j)| {
            let eff = scaling_efficiency(j, p.width).unwrap_or(f64::NAN);
            vec![
                p.job.clone(),
                p.width.to_string(),
                sig6(eff),
                sig6(p.start),
                sig6(p.end),
            ]
        })
        .collect();
    r.push('\n');
    r.push_str(&table(
        &["job", "width", "efficiency", "start", "end"],
        &rows,
    ));
    r.push('\n');
    r.push_str(&ascii_gantt(&best, 64));
    Ok(out)
}

fn execute(command: &Command) -> Result<(PathBuf, Artifacts), Failure> {
    let threads = || worker_count().map_err(Failure::input);
    match command {
        Command::Characterize(a) => Ok((
            a.out.clone(),
            characterize(&a.profiles, a.format, a.linkage, a.cut, a.k, a.space)?,
        )),
        Command::Roofline(a) => Ok((
            a.out.clone(),
            roofline(
                &a.kernels,
                &a.machine,
                a.format,
                a.transaction_bytes,
                a.precision.into(),
                a.per_kernel,
            )?,
        )),
        Command::Schedule(a) => Ok((
            a.out.clone(),
            schedule(
                &a.jobs,
                a.format,
                a.gpus,
                a.widths.as_deref(),
                a.method,
                a.limit,
                threads()?,
            )?,
        )),
        Command::Report(a) => {
            let mut all = characterize(
                &a.profiles,
                None,
                Linkage::Average,
                None,
                a.k,
                Space::Metric,
            )?;
            all.extend(roofline(
                &a.kernels,
                &a.machine,
                None,
                32,
                Precision::Single,
                false,
            )?);
            all.extend(schedule(
                &a.jobs,
                None,
                a.gpus,
                None,
                a.method,
                DEFAULT_PERMUTATION_LIMIT,
                threads()?,
            )?);
            Ok((a.out.clone(), all))
        }
    }
}

fn write_outputs(dir: &Path, artifacts: &Artifacts) -> Result<(), Failure> {
    ensure_dir(dir).map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
    for (name, bytes) in &artifacts.files {
        let path = dir.join(name);
        write_atomic(&path, bytes).map_err(|e| Failure {
            code: EXIT_OUTPUT,
            message: format!("cannot write {}: {e}", path.display()),
        })?;
    }
    Ok(())
}

/// Runs the command line in `args` (including the program name), printing
/// the report to stdout and diagnostics to stderr. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = execute(&cli.command).and_then(|(dir, artifacts)| {
        for w in &artifacts.warnings {
            eprintln!("warning: {w}");
        }
        write_outputs(&dir, &artifacts)?;
        Ok(artifacts.report)
    });
    match result {
        Ok(report) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(report.as_bytes());
            EXIT_OK
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
