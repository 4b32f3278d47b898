//! Command-line front end. [`main_with`] takes the argument list and the
//! three standard streams so the commands can be driven from tests.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 every document
//! failed, 4 every document failed because of the backend (transport, HTTP
//! or credentials).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::agents::{PromptSet, PROMPT_SET_VERSION};
use crate::corpus::{self, FieldMapping, LoadOptions, SplitSpec, DEFAULT_SEED};
use crate::evalharness::{self, BatchOptions, EvalError, Report, ReportFormat};
use crate::llmclient::{BackendProfile, SamplingParams};
use crate::model::{Dataset, Document, Role};
use crate::orchestrator::{file_stem, select_final, Mode, PipelineConfig, PipelineTrace, RoleBackends, RoleConfig};
use crate::textmetrics::{readability_report, FamiliarWordList};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ALL_FAILED: i32 = 3;
pub const EXIT_BACKEND: i32 = 4;

const SCRIPTED_PROFILE: &str = "scripted";

#[derive(Debug, Parser)]
#[command(name = "popsci", version, about = "Rewrite paper abstracts as popular-science articles with collaborating LLM agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the pipeline over a corpus or a single abstract.
    Run {
        /// Collaboration mode [full, no-notes, no-suggestions, no-collaboration].
        #[arg(long)]
        mode: Option<Mode>,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Shorthand for `run --mode MODE`.
    Ablate {
        /// no-notes, no-suggestions or no-collaboration.
        mode: Mode,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Readability scores for a text file or stdin.
    Metrics {
        file: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        /// Familiar-word list, one lowercase word per line.
        #[arg(long)]
        word_list: Option<PathBuf>,
    },
    /// Mean word and sentence counts of a JSONL corpus.
    Stats {
        corpus: PathBuf,
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: bool,
    },
    /// Per-iteration mean scores from a directory of trace files.
    Trend {
        trace_dir: PathBuf,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSONL corpus, one record per line.
    #[arg(long, conflicts_with = "abstract_file", required_unless_present = "abstract_file")]
    pub input: Option<PathBuf>,
    /// Plain-text abstract to run as a single document.
    #[arg(long = "abstract")]
    pub abstract_file: Option<PathBuf>,
    /// TOML field mapping for the corpus.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Abort on malformed corpus records instead of skipping them.
    #[arg(long)]
    pub strict: bool,
    /// Only run this partition: train, validation or test.
    #[arg(long)]
    pub split: Option<SplitPart>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// TOML file with [pipeline], [profiles.*] and [roles.*] tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bind every role to this profile. `scripted` together with --script
    /// needs no config file.
    #[arg(long)]
    pub backend: Option<String>,
    /// JSONL script, or a directory of `<doc_id>.jsonl` scripts.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Iterations after the initial writing.
    #[arg(short = 't', long)]
    pub iterations: Option<usize>,
    /// Iteration whose draft is reported (default: min(3, t)).
    #[arg(short = 'k', long)]
    pub select_k: Option<usize>,
    #[arg(long)]
    pub parse_retries: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[arg(long, default_value = "popsci-out")]
    pub out: PathBuf,
    /// Label for the report row (default: the mode name).
    #[arg(long)]
    pub approach: Option<String>,
    /// Report format: csv or json.
    #[arg(long, default_value = "csv")]
    pub format: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

/// Config file layout.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub profiles: BTreeMap<String, BackendProfile>,
    #[serde(default)]
    pub roles: BTreeMap<Role, RoleSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub iterations: Option<usize>,
    pub select_k: Option<usize>,
    pub mode: Option<Mode>,
    pub parse_retry_limit: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct RoleSection {
    pub profile: String,
    #[serde(flatten)]
    pub sampling: SamplingParams,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub input: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<PathBuf>,
    pub strict: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitPart>,
    pub documents: usize,
}

/// Everything needed to repeat a run, written to `manifest.json` before the
/// first model call. Profiles name their key variables, never the keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub prompt_set_version: String,
    pub config_path: Option<PathBuf>,
    pub pipeline: PipelineConfig,
    pub profiles: BTreeMap<String, BackendProfile>,
    pub corpus: CorpusSpec,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub approach: String,
    pub parallelism: usize,
}

struct Failure(i32, String);

impl From<String> for Failure {
    fn from(message: String) -> Self {
        Failure(EXIT_CONFIG, message)
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run { mode, args } => cmd_run(mode, &args, stdout),
        Command::Ablate { mode, args } => cmd_run(Some(mode), &args, stdout),
        Command::Metrics {
            file,
            json,
            word_list,
        } => cmd_metrics(file.as_deref(), json, word_list.as_deref(), stdin, stdout),
        Command::Stats {
            corpus,
            mapping,
            strict,
            json,
        } => cmd_stats(&corpus, mapping.as_deref(), strict, json, stdout),
        Command::Trend {
            trace_dir,
            out,
            format,
        } => cmd_trend(&trace_dir, out.as_deref(), &format, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure(code, message)) => {
            let _ = writeln!(stderr, "error: {message}");
            code
        }
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure(1, e.to_string())
}

fn cmd_metrics(
    file: Option<&Path>,
    json: bool,
    word_list: Option<&Path>,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let text = match file {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?,
        None => {
            let mut s = String::new();
            stdin
                .read_to_string(&mut s)
                .map_err(|e| format!("cannot read stdin: {e}"))?;
            s
        }
    };
    if text.trim().is_empty() {
        return Err("input is empty".to_string().into());
    }
    let loaded;
    let familiar = match word_list {
        Some(p) => {
            loaded = FamiliarWordList::load(p).map_err(|e| e.to_string())?;
            &loaded
        }
        None => FamiliarWordList::builtin(),
    };
    let report = readability_report(&text, familiar).map_err(|e| e.to_string())?;
    if json {
        let s = serde_json::to_string_pretty(&report).expect("report serializes");
        writeln!(stdout, "{s}").map_err(io_err)?;
    } else {
        let c = report.counts;
        writeln!(
            stdout,
            "CLI   {:.3}\nFKGL  {:.3}\nDCRS  {:.3}\nsentences {}\nwords {}\nletters {}\nsyllables {}\ndifficult_words {}",
            report.cli, report.fkgl, report.dcrs, c.sentences, c.words, c.letters, c.syllables, c.difficult_words
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn load_options(mapping: Option<&Path>, strict: bool) -> Result<LoadOptions, Failure> {
    let mapping = match mapping {
        Some(p) => FieldMapping::load(p).map_err(|e| e.to_string())?,
        None => FieldMapping::default(),
    };
    Ok(LoadOptions { mapping, strict })
}

fn cmd_stats(
    path: &Path,
    mapping: Option<&Path>,
    strict: bool,
    json: bool,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let opts = load_options(mapping, strict)?;
    let docs = corpus::load_jsonl(path, &opts).map_err(|e| e.to_string())?;
    let s = corpus::stats(&docs).map_err(|e| e.to_string())?;
    if json {
        let text = serde_json::to_string_pretty(&s).expect("stats serialize");
        writeln!(stdout, "{text}").map_err(io_err)?;
    } else {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.1}"));
        writeln!(
            stdout,
            "pairs           {}\nwords (ori)     {:.1}\nsentences (ori) {:.1}\nwords (pln)     {}\nsentences (pln) {}",
            s.pair_count,
            s.abstract_words,
            s.abstract_sentences,
            opt(s.summary_words),
            opt(s.summary_sentences)
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn collect_traces(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_traces(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "trace") {
            out.push(path);
        }
    }
    Ok(())
}

/// Loads every complete trace below `dir`, sorted by path. Failed runs are skipped.
pub fn load_trace_dir(dir: &Path) -> Result<Vec<PipelineTrace>, String> {
    let mut paths = Vec::new();
    collect_traces(dir, &mut paths).map_err(|e| format!("cannot read {}: {e}", dir.display()))?;
    paths.sort();
    let mut traces = Vec::new();
    for p in paths {
        let t = PipelineTrace::load(&p).map_err(|e| e.to_string())?;
        if t.is_complete() {
            traces.push(t);
        } else {
            log::warn!("skipping incomplete trace {}", p.display());
        }
    }
    Ok(traces)
}

fn cmd_trend(dir: &Path, out: Option<&Path>, format: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    let format: ReportFormat = format.parse().map_err(|e: EvalError| e.to_string())?;
    let mut traces = load_trace_dir(dir)?;
    if traces.is_empty() {
        return Err(format!("no complete trace files under {}", dir.display()).into());
    }
    for t in &mut traces {
        if t.reports.len() != t.drafts.len() {
            crate::orchestrator::score_trace(t, FamiliarWordList::builtin()).map_err(|e| e.to_string())?;
        }
    }
    let series = evalharness::trend(&traces).map_err(|e| e.to_string())?;
    let text = evalharness::render_report(Report::Trend(&series), format);
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display()))?,
        None => stdout.write_all(text.as_bytes()).map_err(io_err)?,
    }
    Ok(())
}

struct ResolvedRun {
    manifest: RunManifest,
    docs: Vec<Document>,
    format: ReportFormat,
}

fn resolve_pipeline(
    mode: Option<Mode>,
    args: &RunArgs,
    file: &ConfigFile,
    profiles: &BTreeMap<String, BackendProfile>,
) -> Result<PipelineConfig, String> {
    let defaults = PipelineConfig::default();
    let iterations = args
        .iterations
        .or(file.pipeline.iterations)
        .unwrap_or(defaults.iterations);
    let select_k = args
        .select_k
        .or(file.pipeline.select_k)
        .unwrap_or(defaults.select_k.min(iterations));
    let mode = mode.or(file.pipeline.mode).unwrap_or_default();

    let role_configs: Vec<RoleConfig> = match &args.backend {
        Some(name) => {
            if !profiles.contains_key(name) {
                return Err(format!("--backend {name:?} does not name a profile"));
            }
            Role::ALL
                .into_iter()
                .map(|role| RoleConfig {
                    role,
                    endpoint_ref: name.clone(),
                    sampling: file.roles.get(&role).map(|r| r.sampling).unwrap_or_default(),
                })
                .collect()
        }
        None => file
            .roles
            .iter()
            .map(|(&role, r)| RoleConfig {
                role,
                endpoint_ref: r.profile.clone(),
                sampling: r.sampling,
            })
            .collect(),
    };
    for rc in &role_configs {
        if !profiles.contains_key(&rc.endpoint_ref) {
            return Err(format!(
                "role {} refers to unknown profile {:?}",
                rc.role, rc.endpoint_ref
            ));
        }
    }
    let cfg = PipelineConfig {
        iterations,
        select_k,
        mode,
        role_configs,
        parse_retry_limit: args
            .parse_retries
            .or(file.pipeline.parse_retry_limit)
            .unwrap_or(defaults.parse_retry_limit),
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn load_documents(args: &RunArgs) -> Result<(Vec<Document>, PathBuf), String> {
    if let Some(p) = &args.abstract_file {
        let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
        if text.trim().is_empty() {
            return Err(format!("{} is empty", p.display()));
        }
        let id = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "abstract".into());
        return Ok((vec![Document::new(id, text.trim())], p.clone()));
    }
    let input = args.input.clone().expect("clap requires --input or --abstract");
    let opts = load_options(args.mapping.as_deref(), args.strict).map_err(|Failure(_, m)| m)?;
    let mut docs = corpus::load_jsonl(&input, &opts).map_err(|e| e.to_string())?;
    if let Some(part) = args.split {
        let spec = match docs.first().map(|d| d.dataset) {
            Some(Dataset::SciTech) => SplitSpec::SCITECH,
            _ => SplitSpec::NINETY_FIVE_FIVE,
        };
        let s = corpus::split(&docs, spec, args.seed).map_err(|e| e.to_string())?;
        docs = match part {
            SplitPart::Train => s.train,
            SplitPart::Validation => s.validation,
            SplitPart::Test => s.test,
        };
    }
    if docs.is_empty() {
        return Err(format!("no documents to run from {}", input.display()));
    }
    Ok((docs, input))
}

/// Resolves config, profiles and corpus without touching the output directory.
fn resolve_run(mode: Option<Mode>, args: &RunArgs) -> Result<ResolvedRun, String> {
    let format: ReportFormat = args.format.parse().map_err(|e: EvalError| e.to_string())?;
    if args.parallel == 0 {
        return Err("--parallel must be at least 1".into());
    }
    let file = match &args.config {
        Some(p) if !p.is_file() => return Err(format!("config file {} not found", p.display())),
        Some(p) => ConfigFile::load(p)?,
        None if args.script.is_some() => ConfigFile::default(),
        None => return Err("no --config given (or use --backend scripted --script FILE)".into()),
    };
    let mut profiles = file.profiles.clone();
    let mut args = args.clone();
    if let Some(script) = &args.script {
        match args.backend.as_deref() {
            None | Some(SCRIPTED_PROFILE) => {}
            Some(other) => return Err(format!("--script cannot be combined with --backend {other}")),
        }
        profiles.insert(
            SCRIPTED_PROFILE.to_string(),
            BackendProfile::scripted(SCRIPTED_PROFILE, script.clone()),
        );
        args.backend = Some(SCRIPTED_PROFILE.to_string());
    }
    for (name, p) in &mut profiles {
        if p.name.is_empty() {
            p.name = name.clone();
        }
        p.validate().map_err(|e| e.to_string())?;
    }
    let pipeline = resolve_pipeline(mode, &args, &file, &profiles)?;
    let (docs, input) = load_documents(&args)?;
    let approach = args
        .approach
        .clone()
        .unwrap_or_else(|| pipeline.mode.as_str().to_string());
    let used: Vec<&str> = pipeline
        .mode
        .required_roles()
        .iter()
        .filter_map(|r| pipeline.role_config(*r))
        .map(|rc| rc.endpoint_ref.as_str())
        .collect();
    profiles.retain(|name, _| used.contains(&name.as_str()));
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        prompt_set_version: PROMPT_SET_VERSION.to_string(),
        config_path: args.config.clone(),
        pipeline,
        profiles,
        corpus: CorpusSpec {
            input,
            mapping: args.mapping.clone(),
            strict: args.strict,
            split: args.split,
            documents: docs.len(),
        },
        output_dir: args.out.clone(),
        seed: args.seed,
        approach,
        parallelism: args.parallel,
    };
    Ok(ResolvedRun {
        manifest,
        docs,
        format,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Failure(1, format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Failure(1, format!("{}: {e}", path.display())))
}

fn cmd_run(mode: Option<Mode>, args: &RunArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let ResolvedRun {
        manifest,
        docs,
        format,
    } = resolve_run(mode, args)?;
    let out = &manifest.output_dir;
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_file(&out.join("manifest.json"), &manifest_json)?;

    let cfg = &manifest.pipeline;
    let opts = BatchOptions {
        approach: manifest.approach.clone(),
        parallelism: manifest.parallelism,
        trace_dir: Some(out.join("traces")),
        prompts: PromptSet::builtin(),
        familiar: FamiliarWordList::builtin(),
    };
    let connect = |doc: &Document| RoleBackends::connect(cfg, &manifest.profiles, &doc.id);
    let result = match evalharness::evaluate_batch(&docs, cfg, connect, &opts) {
        Ok(r) => r,
        Err(EvalError::AllFailed(failures)) => {
            let failures_json = serde_json::to_string_pretty(&failures).expect("failures serialize") + "\n";
            write_file(&out.join("failures.json"), &failures_json)?;
            let code = if failures.iter().all(|f| f.backend_failure) {
                EXIT_BACKEND
            } else {
                EXIT_ALL_FAILED
            };
            return Err(Failure(code, EvalError::AllFailed(failures).to_string()));
        }
        Err(e) => return Err(Failure(1, e.to_string())),
    };

    for trace in &result.traces {
        let article = select_final(trace, cfg.select_k).expect("checked by evaluate_batch");
        let path = out
            .join("articles")
            .join(trace.doc.dataset.as_str())
            .join(format!("{}.md", file_stem(&trace.doc.id)));
        write_file(&path, &format!("{}\n", article.text.trim_end()))?;
    }
    if !result.failures.is_empty() {
        let failures_json = serde_json::to_string_pretty(&result.failures).expect("failures serialize") + "\n";
        write_file(&out.join("failures.json"), &failures_json)?;
    }
    let rows = [result.row];
    let ext = match format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    };
    let report = evalharness::render_report(Report::Rows(&rows), format);
    write_file(&out.join(format!("report.{ext}")), &report)?;
    stdout.write_all(report.as_bytes()).map_err(io_err)?;
    Ok(())
}
