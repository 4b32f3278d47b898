//! Batch evaluation: run many documents, score the selected drafts, and
//! aggregate into comparison rows and per-iteration trend series.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use crate::agents::PromptSet;
use crate::model::Document;
use crate::orchestrator::{
    run_pipeline, score_trace, select_final, ConfigError, ConnectError, PipelineConfig, PipelineTrace,
    RoleBackends, TraceFileError,
};
use crate::textmetrics::{FamiliarWordList, ReadabilityReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no documents to evaluate")]
    EmptyBatch,
    #[error("parallelism must be at least 1")]
    InvalidParallelism,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("all {} document(s) failed; first: {}", .0.len(), .0[0])]
    AllFailed(Vec<DocFailure>),
    #[error(transparent)]
    TraceFile(#[from] TraceFileError),
    #[error("no traces given")]
    NoTraces,
    #[error("trace {doc_id} has {found} iteration(s), expected {expected}")]
    MixedIterationCounts {
        doc_id: String,
        expected: usize,
        found: usize,
    },
    #[error("trace {0} is incomplete")]
    IncompleteTrace(String),
    #[error("trace {0} has no readability reports")]
    Unscored(String),
    #[error("unknown report format {0:?} (expected csv or json)")]
    UnknownFormat(String),
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

/// One comparison row: mean scores of the selected drafts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub approach: String,
    pub dataset: String,
    pub cli: f64,
    pub fkgl: f64,
    pub dcrs: f64,
    /// Mean of the three metric means.
    pub avg: f64,
    /// Documents that completed and contribute to the means.
    pub n: usize,
    pub failures: usize,
}

impl EvalRow {
    /// Averages `reports` in the given order. An empty slice yields NaN means.
    pub fn from_reports(
        approach: impl Into<String>,
        dataset: impl Into<String>,
        reports: &[ReadabilityReport],
        failures: usize,
    ) -> Self {
        let n = reports.len();
        let mean = |f: fn(&ReadabilityReport) -> f64| reports.iter().map(f).sum::<f64>() / n as f64;
        let (cli, fkgl, dcrs) = (mean(|r| r.cli), mean(|r| r.fkgl), mean(|r| r.dcrs));
        Self {
            approach: approach.into(),
            dataset: dataset.into(),
            cli,
            fkgl,
            dcrs,
            avg: (cli + fkgl + dcrs) / 3.0,
            n,
            failures,
        }
    }
}

/// Mean of every metric cell across `rows`. For one approach evaluated on
/// three datasets this is the nine-cell average; for a single row it equals
/// that row's `avg`.
pub fn grand_average(rows: &[EvalRow]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let total: f64 = rows.iter().map(|r| r.cli + r.fkgl + r.dcrs).sum();
    Some(total / (3 * rows.len()) as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocFailure {
    pub doc_id: String,
    pub message: String,
    /// Endpoint, transport or credential trouble rather than bad model output.
    pub backend_failure: bool,
}

impl fmt::Display for DocFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.doc_id, self.message)
    }
}

pub struct BatchOptions<'a> {
    pub approach: String,
    pub parallelism: usize,
    /// Where to write `{dataset}/{doc_id}.trace` files, failed runs included.
    pub trace_dir: Option<PathBuf>,
    pub prompts: &'a PromptSet,
    pub familiar: &'a FamiliarWordList,
}

impl BatchOptions<'static> {
    pub fn new(approach: impl Into<String>) -> Self {
        Self {
            approach: approach.into(),
            parallelism: 1,
            trace_dir: None,
            prompts: PromptSet::builtin(),
            familiar: FamiliarWordList::builtin(),
        }
    }
}

impl<'a> BatchOptions<'a> {
    pub fn parallelism(mut self, n: usize) -> Self {
        self.parallelism = n;
        self
    }

    pub fn trace_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.trace_dir = Some(dir.into());
        self
    }
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    /// Successful, scored traces in input order.
    pub traces: Vec<PipelineTrace>,
    pub failures: Vec<DocFailure>,
    pub row: EvalRow,
    pub written: Vec<PathBuf>,
}

enum Outcome {
    Done(PipelineTrace),
    Failed(DocFailure, Option<PipelineTrace>),
}

fn evaluate_one<F>(doc: &Document, cfg: &PipelineConfig, connect: &F, opts: &BatchOptions<'_>) -> Outcome
where
    F: Fn(&Document) -> Result<RoleBackends, ConnectError>,
{
    let fail = |message: String, backend_failure: bool, trace: Option<PipelineTrace>| {
        log::warn!("{}: {message}", doc.id);
        Outcome::Failed(
            DocFailure {
                doc_id: doc.id.clone(),
                message,
                backend_failure,
            },
            trace,
        )
    };
    let backends = match connect(doc) {
        Ok(b) => b,
        Err(e) => return fail(e.to_string(), matches!(e, ConnectError::Backend(_)), None),
    };
    let mut trace = match run_pipeline(doc, cfg, &backends, opts.prompts) {
        Ok(t) => t,
        Err(e) => {
            let backend = e.is_backend_failure();
            return fail(e.kind.to_string(), backend, Some(*e.trace));
        }
    };
    if let Err(e) = score_trace(&mut trace, opts.familiar) {
        trace.failure = Some(format!("scoring failed: {e}"));
        return fail(format!("scoring failed: {e}"), false, Some(trace));
    }
    if let Err(e) = select_final(&trace, cfg.select_k) {
        return fail(e.to_string(), false, Some(trace));
    }
    Outcome::Done(trace)
}

/// Runs every document with at most `opts.parallelism` pipelines in flight.
/// A failing document is recorded and skipped; results are reduced in input
/// order, so the row does not depend on scheduling.
pub fn evaluate_batch<F>(
    docs: &[Document],
    cfg: &PipelineConfig,
    connect: F,
    opts: &BatchOptions<'_>,
) -> Result<BatchResult, EvalError>
where
    F: Fn(&Document) -> Result<RoleBackends, ConnectError> + Sync,
{
    if docs.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    if opts.parallelism == 0 {
        return Err(EvalError::InvalidParallelism);
    }
    cfg.validate()?;

    let slots: Mutex<Vec<Option<Outcome>>> = Mutex::new((0..docs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = opts.parallelism.min(docs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(doc) = docs.get(i) else { break };
                let outcome = evaluate_one(doc, cfg, &connect, opts);
                slots.lock().expect("results lock")[i] = Some(outcome);
            });
        }
    });
    let outcomes = slots.into_inner().expect("results lock");

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    let mut written = Vec::new();
    for outcome in outcomes.into_iter().map(|o| o.expect("every document evaluated")) {
        let trace = match outcome {
            Outcome::Done(t) => {
                traces.push(t);
                traces.last()
            }
            Outcome::Failed(f, t) => {
                failures.push(f);
                if let (Some(dir), Some(t)) = (&opts.trace_dir, &t) {
                    written.push(t.save(dir)?);
                }
                None
            }
        };
        if let (Some(dir), Some(t)) = (&opts.trace_dir, trace) {
            written.push(t.save(dir)?);
        }
    }
    if traces.is_empty() {
        return Err(EvalError::AllFailed(failures));
    }

    let reports: Vec<ReadabilityReport> = traces
        .iter()
        .map(|t| t.reports[cfg.select_k])
        .collect();
    let row = EvalRow::from_reports(
        opts.approach.clone(),
        dataset_label(docs),
        &reports,
        failures.len(),
    );
    Ok(BatchResult {
        traces,
        failures,
        row,
        written,
    })
}

fn dataset_label(docs: &[Document]) -> String {
    let first = docs[0].dataset;
    if docs.iter().all(|d| d.dataset == first) {
        first.to_string()
    } else {
        "mixed".to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendPoint {
    pub iteration: usize,
    pub cli: f64,
    pub fkgl: f64,
    pub dcrs: f64,
}

/// Mean scores per iteration; point 0 is the initial writing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSeries {
    pub documents: usize,
    pub points: Vec<TrendPoint>,
}

/// Per-iteration means over scored, complete traces that share one `t`.
pub fn trend(traces: &[PipelineTrace]) -> Result<TrendSeries, EvalError> {
    let first = traces.first().ok_or(EvalError::NoTraces)?;
    let t = first.iterations();
    for trace in traces {
        if trace.iterations() != t {
            return Err(EvalError::MixedIterationCounts {
                doc_id: trace.doc.id.clone(),
                expected: t,
                found: trace.iterations(),
            });
        }
        if !trace.is_complete() {
            return Err(EvalError::IncompleteTrace(trace.doc.id.clone()));
        }
        if trace.reports.len() != trace.drafts.len() {
            return Err(EvalError::Unscored(trace.doc.id.clone()));
        }
    }
    let n = traces.len() as f64;
    let points = (0..=t)
        .map(|i| {
            let mean = |f: fn(&ReadabilityReport) -> f64| {
                traces.iter().map(|tr| f(&tr.reports[i])).sum::<f64>() / n
            };
            TrendPoint {
                iteration: i,
                cli: mean(|r| r.cli),
                fkgl: mean(|r| r.fkgl),
                dcrs: mean(|r| r.dcrs),
            }
        })
        .collect();
    Ok(TrendSeries {
        documents: traces.len(),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    Rows(&'a [EvalRow]),
    Trend(&'a TrendSeries),
}

const ROW_HEADER: [&str; 8] = ["approach", "dataset", "CLI", "FKGL", "DCRS", "Avg", "n", "failures"];
const TREND_HEADER: [&str; 4] = ["iteration", "CLI", "FKGL", "DCRS"];

fn score(x: f64) -> String {
    format!("{x:.4}")
}

fn to_csv(report: Report<'_>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let res = match report {
        Report::Rows(rows) => std::iter::once(w.write_record(ROW_HEADER))
            .chain(rows.iter().map(|r| {
                w.write_record([
                    r.approach.clone(),
                    r.dataset.clone(),
                    score(r.cli),
                    score(r.fkgl),
                    score(r.dcrs),
                    score(r.avg),
                    r.n.to_string(),
                    r.failures.to_string(),
                ])
            }))
            .collect::<Result<(), _>>(),
        Report::Trend(series) => std::iter::once(w.write_record(TREND_HEADER))
            .chain(series.points.iter().map(|p| {
                w.write_record([
                    p.iteration.to_string(),
                    score(p.cli),
                    score(p.fkgl),
                    score(p.dcrs),
                ])
            }))
            .collect::<Result<(), _>>(),
    };
    res.expect("writing csv to memory");
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

/// Renders a report. CSV columns are fixed: `approach, dataset, CLI, FKGL,
/// DCRS, Avg, n, failures` for rows and `iteration, CLI, FKGL, DCRS` for trends.
pub fn render_report(report: Report<'_>, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => to_csv(report),
        ReportFormat::Json => {
            let mut s = match report {
                Report::Rows(rows) => serde_json::to_string_pretty(rows),
                Report::Trend(series) => serde_json::to_string_pretty(series),
            }
            .expect("report serializes");
            s.push('\n');
            s
        }
    }
}

/// Writes a report to `path`. The format is checked before anything touches disk.
pub fn export_report(report: Report<'_>, format: &str, path: impl AsRef<Path>) -> Result<(), EvalError> {
    let format: ReportFormat = format.parse()?;
    let path = path.as_ref();
    std::fs::write(path, render_report(report, format)).map_err(|e| EvalError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(cli: f64, fkgl: f64, dcrs: f64) -> ReadabilityReport {
        ReadabilityReport {
            cli,
            fkgl,
            dcrs,
            counts: Default::default(),
        }
    }

    #[test]
    fn row_means() {
        let row = EvalRow::from_reports("a", "d", &[report(1.0, 2.0, 3.0), report(3.0, 4.0, 5.0)], 1);
        assert_eq!((row.cli, row.fkgl, row.dcrs), (2.0, 3.0, 4.0));
        assert_eq!(row.avg, 3.0);
        assert_eq!((row.n, row.failures), (2, 1));
        assert_eq!(grand_average(std::slice::from_ref(&row)), Some(row.avg));
        assert_eq!(grand_average(&[]), None);
    }

    #[test]
    fn csv_layout() {
        let row = EvalRow::from_reports("LLM-CLBR", "scitech", &[report(12.69, 10.16, 9.79)], 0);
        let csv = render_report(Report::Rows(&[row]), ReportFormat::Csv);
        assert_eq!(
            csv,
            "approach,dataset,CLI,FKGL,DCRS,Avg,n,failures\nLLM-CLBR,scitech,12.6900,10.1600,9.7900,10.8800,1,0\n"
        );
    }

    #[test]
    fn unknown_format_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        let err = export_report(Report::Rows(&[]), "xlsx", &path).unwrap_err();
        assert!(matches!(err, EvalError::UnknownFormat(_)));
        assert!(!path.exists());
    }

    #[test]
    fn trend_needs_traces() {
        assert!(matches!(trend(&[]), Err(EvalError::NoTraces)));
    }
}
