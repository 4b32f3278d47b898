//! Run the full write/read/suggest/revise loop on one document with a
//! scripted backend, then print every call and the score of each draft.

use std::path::Path;

use popsci::agents::PromptSet;
use popsci::corpus::{self, LoadOptions};
use popsci::llmclient::BackendProfile;
use popsci::orchestrator::{run_pipeline, score_trace, select_final, PipelineConfig, RoleBackends};
use popsci::textmetrics::FamiliarWordList;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let docs = corpus::load_jsonl(fixtures.join("abstracts.jsonl"), &LoadOptions::default())?;
    let doc = &docs[0];

    let profile = BackendProfile::scripted("scripted", fixtures.join("scripts/full"));
    let backends = RoleBackends::shared(profile.connect(&doc.id)?);
    let cfg = PipelineConfig::default().with_iterations(3);

    let mut trace = run_pipeline(doc, &cfg, &backends, PromptSet::builtin()).map_err(|e| e.kind)?;
    score_trace(&mut trace, FamiliarWordList::builtin())?;

    for rec in &trace.call_records {
        println!("iter {} {:<10} {:<8} attempts={}", rec.iteration, rec.role.as_str(), rec.template_id.as_str(), rec.attempts);
    }
    for (draft, r) in trace.drafts.iter().zip(&trace.reports) {
        println!("draft {}: CLI {:.2} FKGL {:.2} DCRS {:.2}", draft.iteration, r.cli, r.fkgl, r.dcrs);
    }
    println!("\nfinal article (k={}):\n{}", cfg.select_k, select_final(&trace, cfg.select_k)?.text);
    Ok(())
}
