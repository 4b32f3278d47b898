//! Evaluate a corpus with parallel pipelines, save traces, and print the
//! result row plus the per-iteration trend.

use std::path::Path;

use popsci::corpus::{self, LoadOptions};
use popsci::evalharness::{evaluate_batch, render_report, trend, BatchOptions, Report, ReportFormat};
use popsci::llmclient::BackendProfile;
use popsci::model::Document;
use popsci::orchestrator::{ConnectError, PipelineConfig, RoleBackends};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let docs = corpus::load_jsonl(fixtures.join("abstracts.jsonl"), &LoadOptions::default())?;
    let profile = BackendProfile::scripted("scripted", fixtures.join("scripts/full"));
    let connect = |doc: &Document| {
        profile
            .connect(&doc.id)
            .map(RoleBackends::shared)
            .map_err(ConnectError::Backend)
    };

    let out = std::env::temp_dir().join("popsci-batch-example");
    let opts = BatchOptions::new("LLM-CLBR").parallelism(4).trace_dir(&out);
    let cfg = PipelineConfig::default().with_iterations(3);
    let result = evaluate_batch(&docs, &cfg, connect, &opts)?;

    println!("{} traces written under {}", result.written.len(), out.display());
    print!("{}", render_report(Report::Rows(std::slice::from_ref(&result.row)), ReportFormat::Csv));
    println!();
    let series = trend(&result.traces)?;
    print!("{}", render_report(Report::Trend(&series), ReportFormat::Csv));
    Ok(())
}
