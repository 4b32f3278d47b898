//! Print the messages each agent receives for one abstract.

use popsci::agents::PromptSet;
use popsci::mdextract::ReadingNotes;
use popsci::model::{Article, Document};

fn main() {
    let prompts = PromptSet::builtin();
    let doc = Document::new("demo", "We measured enzyme kinetics in yeast under heat stress.");
    let draft = Article::new(0, "Yeast enzymes slow down when it gets hot.");
    let notes = ReadingNotes {
        extractions: vec!["enzyme kinetics".into()],
        explanations: vec!["enzyme kinetics: how fast enzymes do their job".into()],
        raw: String::new(),
    };

    let bundles = [
        prompts.render_write(&doc),
        prompts.render_read(&draft),
        prompts.render_suggest(&doc, &draft, &notes),
        prompts.render_revise(&doc, &draft, &["Explain what an enzyme is."]),
    ];
    for b in bundles {
        let b = b.expect("demo inputs are non-empty");
        println!("==== {} ====", b.template_id.as_str());
        println!("--- system ---\n{}", b.system_text);
        println!("--- user ---\n{}\n", b.user_text);
    }
}
