//! Turn paper abstracts into popular-science articles with three LLM agents.
//!
//! A journalist writes a first draft. Each iteration a reader flags hard
//! terms, an editor turns those notes into advice, and the journalist
//! revises. Drafts are scored with Coleman-Liau, Flesch-Kincaid grade and
//! Dale-Chall; lower means easier to read.
//!
//! ```no_run
//! use popsci::agents::PromptSet;
//! use popsci::llmclient::BackendProfile;
//! use popsci::model::Document;
//! use popsci::orchestrator::{run_pipeline, PipelineConfig, RoleBackends};
//!
//! let profile = BackendProfile::http("local", "http://localhost:8000/v1", "my-model");
//! let doc = Document::new("d1", "We measured enzyme kinetics in yeast.");
//! let backends = RoleBackends::shared(profile.connect(&doc.id).unwrap());
//! let trace = run_pipeline(&doc, &PipelineConfig::default(), &backends, PromptSet::builtin()).unwrap();
//! println!("{}", trace.drafts.last().unwrap().text);
//! ```

pub mod agents;
pub mod cli;
pub mod corpus;
pub mod evalharness;
pub mod llmclient;
pub mod mdextract;
pub mod model;
pub mod orchestrator;
pub mod textmetrics;
