//! Run one abstract against an OpenAI-compatible chat endpoint.
//!
//! ```text
//! export POPSCI_BASE_URL=http://localhost:8000/v1
//! export POPSCI_MODEL=meta-llama/Llama-2-7b-chat-hf
//! export LIVE_API_KEY=...        # omit for endpoints without auth
//! cargo run --example live_endpoint -- 2
//! ```

use popsci::agents::PromptSet;
use popsci::llmclient::BackendProfile;
use popsci::model::Document;
use popsci::orchestrator::{run_pipeline, score_trace, PipelineConfig, RoleBackends};
use popsci::textmetrics::FamiliarWordList;

const ABSTRACT: &str = "Marine heatwaves induce widespread bleaching in scleractinian corals through \
disruption of the symbiosis with photosynthetic dinoflagellates. We quantified thermal tolerance across \
48 colonies and identified heritable variation in bleaching thresholds.";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (Ok(base_url), Ok(model)) = (std::env::var("POPSCI_BASE_URL"), std::env::var("POPSCI_MODEL")) else {
        eprintln!("set POPSCI_BASE_URL and POPSCI_MODEL to run this example");
        return Ok(());
    };
    let t = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);

    // the key, if any, is read from $LIVE_API_KEY at request time
    let profile = BackendProfile::http("live", &base_url, &model);
    let doc = Document::new("coral", ABSTRACT);
    let backends = RoleBackends::shared(profile.connect(&doc.id)?);
    let cfg = PipelineConfig::default().with_iterations(t);

    let mut trace = match run_pipeline(&doc, &cfg, &backends, PromptSet::builtin()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("pipeline failed: {}", e.kind);
            std::process::exit(1);
        }
    };
    score_trace(&mut trace, FamiliarWordList::builtin())?;
    for (d, r) in trace.drafts.iter().zip(&trace.reports) {
        println!("--- draft {} (CLI {:.2}, FKGL {:.2}, DCRS {:.2})\n{}\n", d.iteration, r.cli, r.fkgl, r.dcrs, d.text);
    }
    Ok(())
}
