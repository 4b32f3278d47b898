mod common;

use popsci::agents::PromptSet;
use popsci::corpus::{self, SplitSpec};
use popsci::mdextract::{self, EditorFeedback, ReadingNotes};
use popsci::model::{Article, Document, Role, TemplateId};
use popsci::orchestrator::{run_pipeline, Mode, ParsedOutput, PipelineConfig};
use popsci::textmetrics::{count_syllables, readability_report, FamiliarWordList, TokenizedText};
use proptest::prelude::*;

const FAMILIAR: &[&str] = &[
    "the", "boy", "ran", "home", "after", "school", "and", "ate", "bread", "with", "his", "mother", "dog",
    "water", "green", "tree",
];

fn familiar_sentences() -> impl Strategy<Value = Vec<Vec<&'static str>>> {
    prop::collection::vec(prop::collection::vec(prop::sample::select(FAMILIAR), 1..10), 1..6)
}

fn join(sentences: &[Vec<&str>]) -> String {
    sentences
        .iter()
        .map(|s| format!("{}.", s.join(" ")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn item() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9 ,;:'()-]{0,50}[A-Za-z.)]"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unfamiliar_swap_never_lowers_dale_chall(
        sentences in familiar_sentences(),
        pick in any::<prop::sample::Index>(),
        tail in "[bcdfghjklmnpqrstvwxz]{12}",
    ) {
        let list = FamiliarWordList::builtin();
        let before = join(&sentences);
        let words: Vec<(usize, usize)> = sentences
            .iter()
            .enumerate()
            .flat_map(|(i, s)| (0..s.len()).map(move |j| (i, j)))
            .collect();
        let (i, j) = words[pick.index(words.len())];
        let len = sentences[i][j].len();
        let replacement = format!("q{}", &tail[..len - 1]);
        prop_assume!(!list.is_familiar(&replacement));
        let mut swapped: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| s.iter().map(|w| w.to_string()).collect())
            .collect();
        swapped[i][j] = replacement;
        let after = swapped
            .iter()
            .map(|s| format!("{}.", s.join(" ")))
            .collect::<Vec<_>>()
            .join(" ");
        let a = readability_report(&before, list).unwrap();
        let b = readability_report(&after, list).unwrap();
        prop_assert_eq!(a.counts.letters, b.counts.letters);
        prop_assert!(b.dcrs >= a.dcrs, "{} -> {}", a.dcrs, b.dcrs);
    }

    #[test]
    fn syllable_floor(word in "[A-Za-z]{1,20}", text in "[A-Za-z]{1,12}( [A-Za-z]{1,12}){0,15}\\.") {
        prop_assert!(count_syllables(&word).unwrap() >= 1);
        let tok = TokenizedText::new(&text).unwrap();
        prop_assert!(tok.syllable_count() >= tok.word_count());
    }

    #[test]
    fn metrics_are_deterministic(sentences in familiar_sentences()) {
        let text = join(&sentences);
        let list = FamiliarWordList::builtin();
        let a = readability_report(&text, list).unwrap();
        let b = readability_report(&text, list).unwrap();
        prop_assert_eq!(a.cli.to_bits(), b.cli.to_bits());
        prop_assert_eq!(a.fkgl.to_bits(), b.fkgl.to_bits());
        prop_assert_eq!(a.dcrs.to_bits(), b.dcrs.to_bits());
    }

    #[test]
    fn slot_values_appear_once(abs in "[a-z]{4,12}", art in "[a-z]{4,12}", adv in "[a-z]{4,12}") {
        let sentinels = [format!("ABS-{abs}"), format!("ART-{art}"), format!("ADV-{adv}")];
        let doc = Document::new("s", sentinels[0].clone());
        let prev = Article::new(0, sentinels[1].clone());
        let p = PromptSet::builtin();
        let user = p.render_revise(&doc, &prev, &[sentinels[2].as_str()]).unwrap().user_text;
        for s in &sentinels {
            prop_assert_eq!(user.matches(s.as_str()).count(), 1);
        }
        let write = p.render_write(&doc).unwrap();
        prop_assert_eq!(write.user_text.matches(sentinels[0].as_str()).count(), 1);
        prop_assert_eq!(p.render_write(&doc).unwrap(), write);
    }

    #[test]
    fn notes_round_trip_keeps_order(
        extractions in prop::collection::vec(item(), 1..8),
        explanations in prop::collection::vec(item(), 1..8),
    ) {
        let notes = ReadingNotes { extractions, explanations, raw: String::new() };
        let raw = notes.to_markdown();
        let back = mdextract::parse_notes(&raw).unwrap();
        prop_assert_eq!(&back.extractions, &notes.extractions);
        prop_assert_eq!(&back.explanations, &notes.explanations);
    }

    #[test]
    fn parsed_feedback_is_quoted_from_input(
        evaluation in prop::collection::vec(item(), 0..4),
        advice in prop::collection::vec(item(), 1..6),
        preamble in "[A-Za-z ]{0,30}",
    ) {
        let fb = EditorFeedback { evaluation, advice, raw: String::new() };
        let raw = format!("{preamble}\n\n{}", fb.to_markdown());
        let back = mdextract::parse_feedback(&raw).unwrap();
        prop_assert_eq!(&back.advice, &fb.advice);
        for s in back.evaluation.iter().chain(&back.advice) {
            prop_assert!(raw.contains(s.as_str()));
        }
    }

    #[test]
    fn split_is_deterministic_disjoint_and_exhaustive(n in 1usize..300, seed in any::<u64>()) {
        let docs: Vec<Document> = (0..n).map(|i| Document::new(format!("d{i}"), "A.")).collect();
        let a = corpus::split(&docs, SplitSpec::NINETY_FIVE_FIVE, seed).unwrap();
        let b = corpus::split(&docs, SplitSpec::NINETY_FIVE_FIVE, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let mut ids: Vec<&str> = a.train.iter().chain(&a.validation).chain(&a.test).map(|d| d.id.as_str()).collect();
        prop_assert_eq!(ids.len(), n);
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), n);
    }

    #[test]
    fn duplicated_corpus_has_same_means(texts in prop::collection::vec(("[A-Z][a-z]{1,8}( [a-z]{1,8}){0,12}\\.", prop::option::of("[A-Z][a-z]{1,8}( [a-z]{1,8}){0,6}\\.")), 1..20)) {
        let docs: Vec<Document> = texts
            .iter()
            .enumerate()
            .map(|(i, (a, s))| {
                let d = Document::new(i.to_string(), a.clone());
                match s { Some(s) => d.with_summary(s.clone()), None => d }
            })
            .collect();
        let doubled: Vec<Document> = docs.iter().chain(&docs).cloned().collect();
        let a = corpus::stats(&docs).unwrap();
        let b = corpus::stats(&doubled).unwrap();
        prop_assert_eq!(a.abstract_words, b.abstract_words);
        prop_assert_eq!(a.abstract_sentences, b.abstract_sentences);
        prop_assert_eq!(a.summary_words, b.summary_words);
        prop_assert_eq!(a.summary_sentences, b.summary_sentences);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn full_mode_call_count_law(t in 0usize..6) {
        let doc = Document::new("law", "We measured enzyme kinetics in yeast.");
        let cfg = PipelineConfig::default().with_iterations(t);
        let trace = run_pipeline(&doc, &cfg, &common::scripted(common::script(Mode::Full, t)), PromptSet::builtin()).unwrap();

        let mut expected = vec![TemplateId::Write];
        for _ in 0..t {
            expected.extend([TemplateId::Read, TemplateId::Suggest, TemplateId::Revise]);
        }
        prop_assert_eq!(trace.call_sequence(), expected);
        prop_assert_eq!(trace.drafts.len(), t + 1);

        for rec in trace.call_records.iter().filter(|r| r.role == Role::Journalist) {
            prop_assert!(rec.messages[1].content.contains(&doc.source_abstract));
        }
        // every draft comes from some call's parsed output
        for d in &trace.drafts {
            let found = trace.call_records.iter().any(|r| match &r.parsed {
                Some(ParsedOutput::Article { text }) => *text == d.text,
                Some(ParsedOutput::Revision(rev)) => rev.article == d.text,
                _ => false,
            });
            prop_assert!(found, "draft {} not found in call records", d.iteration);
        }
    }

    #[test]
    fn ablations_skip_their_roles(t in 1usize..5, which in 0usize..3) {
        let mode = [Mode::NoNotes, Mode::NoSuggestions, Mode::NoCollaboration][which];
        let doc = Document::new("abl", "We measured enzyme kinetics in yeast.");
        let cfg = PipelineConfig::default().with_iterations(t).with_mode(mode);
        let trace = run_pipeline(&doc, &cfg, &common::scripted(common::script(mode, t)), PromptSet::builtin()).unwrap();
        let reads = trace.count_calls(TemplateId::Read);
        let suggests = trace.count_calls(TemplateId::Suggest);
        match mode {
            Mode::NoNotes => prop_assert_eq!(reads, 0),
            Mode::NoSuggestions => prop_assert_eq!(suggests, 0),
            _ => prop_assert_eq!(reads + suggests, 0),
        }
        prop_assert_eq!(trace.count_calls(TemplateId::Revise), t);
    }
}
