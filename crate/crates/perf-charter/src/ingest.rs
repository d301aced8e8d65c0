//! Readers and writers for the profile, job, kernel and machine files.
//!
//! CSV files have a header row; JSON files are arrays of objects keyed by the
//! same field names. Every parser reports the first problem it finds.

use std::collections::BTreeSet;
use std::path::Path;

use perf_charter_core::model::{
    check_unique_job_names, Job, KernelRecord, MetricMatrix, MetricName, ModelError, Suite,
    WorkloadProfile,
};
use perf_charter_core::roofline::{MachineModel, Precision};
use serde::Deserialize;
use serde_json::{Map, Value};

/// Input encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Comma-separated values with a header row.
    Csv,
    /// Array of JSON objects.
    Json,
}

impl Format {
    /// JSON for a `.json` extension (any case), CSV otherwise.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Why an input file was rejected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    /// A row could not be read as CSV (wrong field count, bad quoting).
    #[error("line {line}: malformed row: {message}")]
    MalformedRow {
        /// 1-based line number.
        line: u64,
        /// Parser message.
        message: String,
    },
    /// Two workloads share a name.
    #[error("duplicate workload name `{0}`")]
    DuplicateWorkloadName(String),
    /// A numeric cell failed to parse.
    #[error("line {line}, column `{column}`: `{value}` is not a valid number")]
    NonNumericCell {
        /// 1-based line number (CSV) or record number (JSON).
        line: u64,
        /// Column name.
        column: String,
        /// Cell text.
        value: String,
    },
    /// Analysis needs at least two workloads.
    #[error("at least 2 workloads are required, got {0}")]
    TooFewWorkloads(usize),
    /// Header is missing required columns or has unusable ones.
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    /// The file holds no records.
    #[error("no records found")]
    EmptyInput,
    /// Text is not valid JSON of the expected shape.
    #[error("invalid JSON: {0}")]
    Json(String),
    /// Values violate a domain rule.
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Parsed profile table.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProfiles {
    /// Complete workload × metric matrix.
    pub matrix: MetricMatrix,
    /// Columns dropped because some workload had no value.
    pub dropped: Vec<MetricName>,
}

/// One kernel record with the workload it belongs to, if the file says.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    /// Value of the optional `workload` column.
    pub workload: Option<String>,
    /// The record.
    pub record: KernelRecord,
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.strip_prefix('\u{feff}').unwrap_or(text).as_bytes())
}

fn malformed(e: &csv::Error) -> IngestError {
    IngestError::MalformedRow {
        line: e.position().map_or(0, |p| p.line()),
        message: match e.kind() {
            csv::ErrorKind::UnequalLengths {
                expected_len, len, ..
            } => format!("expected {expected_len} fields, found {len}"),
            _ => e.to_string(),
        },
    }
}

fn number(line: u64, column: &str, cell: &str) -> Result<f64, IngestError> {
    cell.parse::<f64>()
        .map_err(|_| IngestError::NonNumericCell {
            line,
            column: column.to_string(),
            value: cell.to_string(),
        })
}

fn count(line: u64, column: &str, cell: &str) -> Result<u64, IngestError> {
    cell.parse::<u64>()
        .map_err(|_| IngestError::NonNumericCell {
            line,
            column: column.to_string(),
            value: cell.to_string(),
        })
}

/// Rows of `{header: cell}` with the 1-based line (CSV) or record number
/// (JSON) of each. Empty CSV cells and JSON nulls are `None`.
struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<Option<String>>)>,
}

fn read_csv_table(text: &str) -> Result<Table, IngestError> {
    let mut rdr = csv_reader(text);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| malformed(&e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(IngestError::EmptyInput);
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(&e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let cells = rec
            .iter()
            .map(|c| (!c.is_empty()).then(|| c.to_string()))
            .collect();
        rows.push((line, cells));
    }
    Ok(Table { header, rows })
}

fn read_json_table(text: &str) -> Result<Table, IngestError> {
    let records: Vec<Map<String, Value>> =
        serde_json::from_str(text).map_err(|e| IngestError::Json(e.to_string()))?;
    let mut header: Vec<String> = Vec::new();
    for r in &records {
        for k in r.keys() {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let rows = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let cells = header
                .iter()
                .map(|k| match r.get(k) {
                    None | Some(Value::Null) => None,
                    Some(Value::String(s)) => Some(s.clone()),
                    Some(v) => Some(v.to_string()),
                })
                .collect();
            (i as u64 + 1, cells)
        })
        .collect();
    Ok(Table { header, rows })
}

fn read_table(text: &str, format: Format) -> Result<Table, IngestError> {
    match format {
        Format::Csv => read_csv_table(text),
        Format::Json => read_json_table(text),
    }
}

impl Table {
    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn require(&self, name: &str) -> Result<usize, IngestError> {
        self.column(name)
            .ok_or_else(|| IngestError::InvalidHeader(format!("missing column `{name}`")))
    }
}

/// Parses a workload profile table (`name,suite,<metric…>`).
///
/// Canonical metrics are ordered first, extras follow in file order. A metric
/// with an empty cell for any workload is dropped and listed in
/// [`ParsedProfiles::dropped`].
pub fn parse_profiles(text: &str, format: Format) -> Result<ParsedProfiles, IngestError> {
    let table = read_table(text, format)?;
    let name_col = table.require("name")?;
    let suite_col = table.column("suite");
    let mut metric_cols = Vec::new();
    for (j, h) in table.header.iter().enumerate() {
        if j == name_col || Some(j) == suite_col {
            continue;
        }
        let metric: MetricName =
            h.parse()
                .map_err(|e: perf_charter_core::model::InvalidMetricName| {
                    IngestError::InvalidHeader(e.to_string())
                })?;
        if metric_cols.iter().any(|(_, m)| *m == metric) {
            return Err(IngestError::InvalidHeader(format!(
                "duplicate column `{h}`"
            )));
        }
        metric_cols.push((j, metric));
    }

    let mut seen = BTreeSet::new();
    let mut profiles = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        let name = cells[name_col]
            .clone()
            .ok_or_else(|| IngestError::MalformedRow {
                line: *line,
                message: "empty workload name".into(),
            })?;
        if !seen.insert(name.clone()) {
            return Err(IngestError::DuplicateWorkloadName(name));
        }
        let suite = suite_col
            .and_then(|j| cells[j].as_deref())
            .map_or(Suite::Other, Suite::parse_lenient);
        let mut p = WorkloadProfile::new(name, suite);
        for (j, metric) in &metric_cols {
            if let Some(cell) = &cells[*j] {
                p.metrics
                    .insert(metric.clone(), number(*line, metric.as_str(), cell)?);
            }
        }
        profiles.push(p);
    }
    if profiles.len() < 2 {
        return Err(IngestError::TooFewWorkloads(profiles.len()));
    }
    let order: Vec<MetricName> = metric_cols.into_iter().map(|(_, m)| m).collect();
    let assembled = MetricMatrix::from_profiles(&profiles, &order)?;
    Ok(ParsedProfiles {
        matrix: assembled.matrix,
        dropped: assembled.dropped,
    })
}

/// Parses a job table (`name,t1_minutes,s2,s4,…`). Empty speedup cells mean
/// the width was not measured.
pub fn parse_jobs(text: &str, format: Format) -> Result<Vec<Job>, IngestError> {
    let table = read_table(text, format)?;
    let name_col = table.require("name")?;
    let t1_col = table.require("t1_minutes")?;
    let mut width_cols = Vec::new();
    for (j, h) in table.header.iter().enumerate() {
        if j == name_col || j == t1_col {
            continue;
        }
        let width = h
            .strip_prefix('s')
            .and_then(|k| k.parse::<u32>().ok())
            .filter(|&k| k > 0)
            .ok_or_else(|| {
                IngestError::InvalidHeader(format!("`{h}` is not a speedup column `s<width>`"))
            })?;
        if width_cols.iter().any(|&(_, w)| w == width) {
            return Err(IngestError::InvalidHeader(format!(
                "duplicate column `{h}`"
            )));
        }
        width_cols.push((j, width));
    }

    let mut jobs = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        let name = cells[name_col]
            .clone()
            .ok_or_else(|| IngestError::MalformedRow {
                line: *line,
                message: "empty job name".into(),
            })?;
        let t1_cell = cells[t1_col].as_deref().unwrap_or("");
        let t1 = number(*line, "t1_minutes", t1_cell)?;
        let mut speedups = Vec::new();
        for &(j, w) in &width_cols {
            if let Some(cell) = &cells[j] {
                speedups.push((w, number(*line, &table.header[j], cell)?));
            }
        }
        jobs.push(Job::new(name, t1, speedups)?);
    }
    check_unique_job_names(&jobs)?;
    Ok(jobs)
}

const KERNEL_COLUMNS: [&str; 6] = [
    "class",
    "time_ms",
    "calls",
    "unique",
    "flops",
    "transactions",
];

/// Parses a kernel-class table (`class,time_ms,calls,unique,flops,transactions`
/// plus an optional `workload` column). Fails on a file without records.
pub fn parse_kernels(text: &str, format: Format) -> Result<Vec<KernelRow>, IngestError> {
    if text.trim().is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let table = read_table(text, format)?;
    let cols = KERNEL_COLUMNS
        .iter()
        .map(|c| table.require(c))
        .collect::<Result<Vec<_>, _>>()?;
    let workload_col = table.column("workload");
    if table.rows.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        let cell = |k: usize| cells[cols[k]].as_deref().unwrap_or("");
        let class_name = cells[cols[0]]
            .clone()
            .ok_or_else(|| IngestError::MalformedRow {
                line: *line,
                message: "empty kernel class".into(),
            })?;
        let record = KernelRecord {
            class_name,
            time_ms: number(*line, "time_ms", cell(1))?,
            calls: count(*line, "calls", cell(2))?,
            unique_kernels: count(*line, "unique", cell(3))?,
            flops: count(*line, "flops", cell(4))?,
            transactions: count(*line, "transactions", cell(5))?,
        };
        record.validate()?;
        out.push(KernelRow {
            workload: workload_col.and_then(|j| cells[j].clone()),
            record,
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct MachineFile {
    name: String,
    peaks: MachinePeaks,
    mem_bandwidth_gbps: f64,
    #[serde(default)]
    extra_ceilings: Vec<ExtraCeiling>,
}

#[derive(Deserialize)]
struct MachinePeaks {
    double: Option<f64>,
    single: Option<f64>,
    half: Option<f64>,
}

#[derive(Deserialize)]
struct ExtraCeiling {
    label: String,
    gbps: f64,
}

/// Parses a machine description:
/// `{name, peaks: {double, single, half}, mem_bandwidth_gbps, extra_ceilings?}`.
/// Any subset of the three peaks may be given.
pub fn parse_machine(text: &str) -> Result<MachineModel, IngestError> {
    let file: MachineFile =
        serde_json::from_str(text).map_err(|e| IngestError::Json(e.to_string()))?;
    let peaks = [
        (Precision::Double, file.peaks.double),
        (Precision::Single, file.peaks.single),
        (Precision::Half, file.peaks.half),
    ]
    .into_iter()
    .filter_map(|(p, v)| v.map(|v| (p, v)))
    .collect();
    Ok(MachineModel {
        name: file.name,
        peaks,
        mem_bandwidth_gbps: file.mem_bandwidth_gbps,
        extra_ceilings: file
            .extra_ceilings
            .into_iter()
            .map(|c| (c.label, c.gbps))
            .collect(),
    })
}

/// Writes a profile matrix in the format [`parse_profiles`] reads.
pub fn profiles_to_string(matrix: &MetricMatrix, format: Format) -> String {
    let mut header = vec!["name".to_string(), "suite".to_string()];
    header.extend(matrix.metric_names().iter().map(|m| m.to_string()));
    let rows = (0..matrix.n_workloads()).map(|i| {
        let mut row = vec![
            Value::String(matrix.workload_names()[i].clone()),
            Value::String(matrix.suites()[i].to_string()),
        ];
        row.extend(matrix.values().row(i).iter().map(|&v| Value::from(v)));
        row
    });
    write_table(&header, rows, format)
}

/// Writes jobs in the format [`parse_jobs`] reads, with one `s<k>` column per
/// measured width above 1.
pub fn jobs_to_string(jobs: &[Job], format: Format) -> String {
    let widths: BTreeSet<u32> = jobs
        .iter()
        .flat_map(|j| j.widths())
        .filter(|&w| w != 1)
        .collect();
    let mut header = vec!["name".to_string(), "t1_minutes".to_string()];
    header.extend(widths.iter().map(|w| format!("s{w}")));
    let rows = jobs.iter().map(|j| {
        let mut row = vec![
            Value::String(j.name().to_string()),
            Value::from(j.t1_minutes()),
        ];
        row.extend(
            widths
                .iter()
                .map(|&w| j.speedup(w).map_or(Value::Null, Value::from)),
        );
        row
    });
    write_table(&header, rows, format)
}

fn write_table(
    header: &[String],
    rows: impl Iterator<Item = Vec<Value>>,
    format: Format,
) -> String {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header).expect("writing to memory");
            for row in rows {
                let cells: Vec<String> = row
                    .iter()
                    .map(|v| match v {
                        Value::Null => String::new(),
                        Value::String(s) => s.clone(),
                        Value::Number(_) => v.as_f64().map(|x| x.to_string()).unwrap_or_default(),
                        other => other.to_string(),
                    })
                    .collect();
                w.write_record(&cells).expect("writing to memory");
            }
            String::from_utf8(w.into_inner().expect("flushing memory")).expect("UTF-8 input")
        }
        Format::Json => {
            let records: Vec<Value> = rows
                .map(|row| {
                    let obj: Map<String, Value> = header
                        .iter()
                        .cloned()
                        .zip(row)
                        .filter(|(_, v)| !v.is_null())
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&records).expect("serializable");
            s.push('\n');
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_job_row() {
        let jobs = parse_jobs(
            "name,t1_minutes,s2,s4,s8\nRes50_TF,1016.9,1.92,3.84,7.04\nJ,10,,,\nNCF_Py,2.2,1.88,2.16,2.32\n",
            Format::Csv,
        )
        .unwrap();
        assert_eq!(jobs[0].t1_minutes(), 1016.9);
        let sp: Vec<(u32, f64)> = jobs[0].speedups().iter().map(|(&w, &s)| (w, s)).collect();
        assert_eq!(sp, [(1, 1.0), (2, 1.92), (4, 3.84), (8, 7.04)]);
        assert_eq!(jobs[1].speedups().len(), 1);
        assert_eq!(jobs[2].speedup(8), Some(2.32));
    }

    #[test]
    fn job_errors() {
        let bad = |text: &str| parse_jobs(text, Format::Csv).unwrap_err();
        assert!(matches!(
            bad("name,t1_minutes\nA,0\n"),
            IngestError::Model(ModelError::NonPositiveTime { .. })
        ));
        assert!(matches!(
            bad("name,t1_minutes,s2\nA,1,-1\n"),
            IngestError::Model(ModelError::NonPositiveSpeedup { .. })
        ));
        assert!(matches!(
            bad("name,t1_minutes\nA,1\nA,2\n"),
            IngestError::Model(ModelError::DuplicateJobName(_))
        ));
        assert!(matches!(
            bad("name,t1_minutes,x2\nA,1,2\n"),
            IngestError::InvalidHeader(_)
        ));
        assert!(matches!(
            bad("name,t1_minutes\nA,abc\n"),
            IngestError::NonNumericCell { line: 2, .. }
        ));
    }

    #[test]
    fn profile_errors() {
        let bad = |text: &str| parse_profiles(text, Format::Csv).unwrap_err();
        assert_eq!(
            bad("name,suite,epochs\na,MLPerf,1\nb,MLPerf\n"),
            IngestError::MalformedRow {
                line: 3,
                message: "expected 3 fields, found 2".into()
            }
        );
        assert_eq!(
            bad("name,suite,epochs\na,MLPerf,1\na,MLPerf,2\n"),
            IngestError::DuplicateWorkloadName("a".into())
        );
        assert_eq!(
            bad("name,suite,epochs\na,MLPerf,1\nb,MLPerf,x\n"),
            IngestError::NonNumericCell {
                line: 3,
                column: "epochs".into(),
                value: "x".into()
            }
        );
        assert_eq!(
            bad("name,suite,epochs\na,MLPerf,1\n"),
            IngestError::TooFewWorkloads(1)
        );
    }

    #[test]
    fn missing_cell_drops_column() {
        let p = parse_profiles(
            "name,suite,epochs,gpu_util_pct,my_extra\na,MLPerf,3,50,1\nb,DAWNBench,,60,2\nc,x,5,70,3\n",
            Format::Csv,
        )
        .unwrap();
        assert_eq!(p.dropped, vec![MetricName::Epochs]);
        let names: Vec<&str> = p.matrix.metric_names().iter().map(|m| m.as_str()).collect();
        assert_eq!(names, ["gpu_util_pct", "my_extra"]);
        assert_eq!(p.matrix.workload_names(), ["a", "b", "c"]);
        assert_eq!(
            p.matrix.suites(),
            [Suite::MLPerf, Suite::DAWNBench, Suite::Other]
        );
    }

    #[test]
    fn identical_rows() {
        let p = parse_profiles("name,suite,epochs\na,,3\nb,,3\n", Format::Csv).unwrap();
        assert_eq!(p.matrix.values().row(0), p.matrix.values().row(1));
    }

    #[test]
    fn json_mirror() {
        let csv = "name,suite,cpu_util_pct,nvlink_mbps\na,MLPerf,1.5,0\nb,DeepBench,2.25,0\n";
        let from_csv = parse_profiles(csv, Format::Csv).unwrap();
        let json = profiles_to_string(&from_csv.matrix, Format::Json);
        assert_eq!(parse_profiles(&json, Format::Json).unwrap(), from_csv);
        let jobs_json = r#"[{"name":"A","t1_minutes":10,"s2":1.5},{"name":"B","t1_minutes":4}]"#;
        let jobs = parse_jobs(jobs_json, Format::Json).unwrap();
        assert_eq!(jobs[0].speedup(2), Some(1.5));
        assert_eq!(jobs[1].speedup(2), None);
    }

    #[test]
    fn kernels_with_and_without_workload() {
        let rows = parse_kernels(
            "class,time_ms,calls,unique,flops,transactions\nrelu,18482.42,62426,22,8063786730942,198032803079\n",
            Format::Csv,
        )
        .unwrap();
        assert_eq!(rows[0].workload, None);
        assert_eq!(rows[0].record.flops, 8_063_786_730_942);
        let rows = parse_kernels(
            "workload,class,time_ms,calls,unique,flops,transactions\nW,relu,1,1,1,2,3\n",
            Format::Csv,
        )
        .unwrap();
        assert_eq!(rows[0].workload.as_deref(), Some("W"));
        assert_eq!(parse_kernels("", Format::Csv), Err(IngestError::EmptyInput));
        assert_eq!(
            parse_kernels(
                "class,time_ms,calls,unique,flops,transactions\n",
                Format::Csv
            ),
            Err(IngestError::EmptyInput)
        );
        assert!(matches!(
            parse_kernels("class,time_ms\nrelu,1\n", Format::Csv),
            Err(IngestError::InvalidHeader(_))
        ));
    }

    #[test]
    fn machine_file() {
        let m = parse_machine(
            r#"{"name":"m","peaks":{"single":14000,"half":28000},"mem_bandwidth_gbps":800,
                "extra_ceilings":[{"label":"L2","gbps":2500}]}"#,
        )
        .unwrap();
        assert_eq!(m.peaks.len(), 2);
        assert_eq!(m.ridge(Precision::Single).unwrap(), 17.5);
        assert_eq!(m.extra_ceilings, vec![("L2".to_string(), 2500.0)]);
        assert!(matches!(parse_machine("{}"), Err(IngestError::Json(_))));
    }
}
