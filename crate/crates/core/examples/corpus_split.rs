//! Load a JSONL corpus, print its length statistics and a seeded 90/5/5 split.
//!
//! `cargo run --example corpus_split -- path/to/corpus.jsonl [seed]`

use std::path::{Path, PathBuf};

use popsci::corpus::{self, LoadOptions, SplitSpec, DEFAULT_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/abstracts.jsonl"));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(DEFAULT_SEED);

    let docs = corpus::load_jsonl(&path, &LoadOptions::default())?;
    let s = corpus::stats(&docs)?;
    println!("{} pairs", s.pair_count);
    println!("abstract: {:.1} words, {:.1} sentences", s.abstract_words, s.abstract_sentences);
    if let (Some(w), Some(n)) = (s.summary_words, s.summary_sentences) {
        println!("summary:  {w:.1} words, {n:.1} sentences ({} with summaries)", s.summary_count);
    }

    let split = corpus::split(&docs, SplitSpec::NINETY_FIVE_FIVE, seed)?;
    let ids = |part: &[popsci::model::Document]| part.iter().map(|d| d.id.as_str()).collect::<Vec<_>>().join(", ");
    println!("\nseed {seed}");
    println!("train      ({:>3}) {}", split.train.len(), ids(&split.train));
    println!("validation ({:>3}) {}", split.validation.len(), ids(&split.validation));
    println!("test       ({:>3}) {}", split.test.len(), ids(&split.test));
    Ok(())
}
