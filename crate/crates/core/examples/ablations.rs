//! Compare the full pipeline against its three ablations on the fixture corpus.

use std::path::Path;

use popsci::corpus::{self, LoadOptions};
use popsci::evalharness::{evaluate_batch, render_report, BatchOptions, Report, ReportFormat};
use popsci::llmclient::BackendProfile;
use popsci::model::{Document, TemplateId};
use popsci::orchestrator::{ConnectError, Mode, PipelineConfig, RoleBackends};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let docs = corpus::load_jsonl(fixtures.join("abstracts.jsonl"), &LoadOptions::default())?;

    let mut rows = Vec::new();
    for mode in Mode::ALL {
        let profile = BackendProfile::scripted("scripted", fixtures.join("scripts").join(mode.as_str()));
        let connect = |doc: &Document| {
            profile
                .connect(&doc.id)
                .map(RoleBackends::shared)
                .map_err(ConnectError::Backend)
        };
        let cfg = PipelineConfig::default().with_iterations(3).with_mode(mode);
        let result = evaluate_batch(&docs, &cfg, connect, &BatchOptions::new(mode.as_str()))?;
        let t = &result.traces[0];
        println!(
            "{:<17} read={} suggest={} revise={}",
            mode.as_str(),
            t.count_calls(TemplateId::Read),
            t.count_calls(TemplateId::Suggest),
            t.count_calls(TemplateId::Revise)
        );
        rows.push(result.row);
    }
    println!();
    print!("{}", render_report(Report::Rows(&rows), ReportFormat::Csv));
    Ok(())
}
