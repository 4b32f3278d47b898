//! Score a text with the three readability formulas.
//!
//! `cargo run --example readability -- "Some text. More text."`

use popsci::textmetrics::{readability_report, FamiliarWordList};

const SAMPLE: &str = "Photosynthesis converts light energy into chemical energy. \
Chloroplasts contain pigments that absorb specific wavelengths of light.";

fn main() {
    let text = std::env::args().nth(1).unwrap_or_else(|| SAMPLE.to_string());
    let report = match readability_report(&text, FamiliarWordList::builtin()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cannot score: {e}");
            std::process::exit(2);
        }
    };
    let c = report.counts;
    println!("{} sentences, {} words, {} letters, {} syllables, {} difficult", c.sentences, c.words, c.letters, c.syllables, c.difficult_words);
    println!("CLI  {:7.3}", report.cli);
    println!("FKGL {:7.3}", report.fkgl);
    println!("DCRS {:7.3}", report.dcrs);
    println!("avg  {:7.3}", report.average());
}
