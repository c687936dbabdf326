//! The `vapu` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::eval::{
    aggregate_runs, build_comparison_report, normalize_durations, select_temperature_by, CheckerRegistry,
    ExternalCommandChecker, LocBands, MethodRecord, TemperatureScore,
};
use crate::gateway::{GenerationParams, ModelRegistry};
use crate::pipeline::{RequirementKind, RequirementSpec};
use crate::prompt::{OneShotExample, TemplateSet};
use crate::workspace::{
    evaluate, load_annotations, load_codebase, load_features, read_records, read_text, replay_transcript, run_batch,
    write_records, Annotations, Backend, BatchInputs, Method, RunConfig, ScoredRecord, WorkspaceError,
};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    /// Bad arguments, configuration or inputs.
    pub const USAGE: i32 = 2;
    pub const GATEWAY: i32 = 3;
    pub const PIPELINE: i32 = 4;
    /// Transcript or filesystem trouble.
    pub const STORAGE: i32 = 5;
    pub const EVAL: i32 = 6;
    pub const REPLAY_MISMATCH: i32 = 7;
}

#[derive(Debug, Parser)]
#[command(name = "vapu", version, about = "Update legacy code files with a verifying agent pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the agent pipeline over every project file.
    Update(UpdateArgs),
    /// Run single-prompt zero-shot or one-shot updates for comparison.
    Baseline(BaselineArgs),
    /// Score transcripts, merging in annotations, into `<output-dir>/records/<method>.runs`.
    Evaluate(EvaluateArgs),
    /// Summarize scored records and compare two methods.
    Report(ReportArgs),
    /// Re-run transcripts from their own recorded responses and check the output is identical.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Live,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineModeArg {
    Zsl,
    Osl,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Model profile id from the registry.
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    /// Update request: one requirement per line.
    #[arg(long)]
    pub requirements: PathBuf,
    /// Root of the codebase to update.
    #[arg(long)]
    pub project: PathBuf,
    /// Glob (relative to the project root) selecting files; repeatable.
    #[arg(long = "include", default_value = "**/*")]
    pub include: Vec<String>,
    /// Repetitions per file [default: 10, or 1 with --pass-at-1].
    #[arg(long)]
    pub runs: Option<u32>,
    /// One run per file.
    #[arg(long)]
    pub pass_at_1: bool,
    #[arg(long, value_enum, default_value = "live")]
    pub backend: BackendArg,
    /// Replay fixtures: `<role>-<index>.txt`, optionally in a `<file-key>/` subdirectory per file.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long, default_value = "vapu-out")]
    pub output_dir: PathBuf,
    /// Model registry (TOML); defaults to the bundled one.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Directory of template assets overriding the defaults.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Concurrent runs.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Overwrite transcripts that already exist.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value_t = 4096)]
    pub max_output_tokens: u32,
    /// Seconds per request.
    #[arg(long, default_value_t = 120.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 3)]
    pub max_retries: u32,
}

#[derive(Debug, Args)]
pub struct UpdateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Verifier/finalizer iterations per task.
    #[arg(long, default_value_t = 2)]
    pub max_feedback_iterations: u32,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value = "zsl")]
    pub mode: BaselineModeArg,
    /// One-shot example (TOML with `input` and `output`), required for osl.
    #[arg(long)]
    pub example: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, default_value = "vapu-out")]
    pub output_dir: PathBuf,
    /// Annotations file (JSON lines of findings, requirements and check marks).
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// External syntax checker, `LANG=COMMAND ARGS...`, fed the code on stdin.
    #[arg(long = "checker", value_name = "LANG=COMMAND")]
    pub checkers: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Scored record files to summarize.
    pub runs: Vec<PathBuf>,
    /// Compare two record files: the pipeline's first, the baseline's second.
    #[arg(long, num_args = 2, value_names = ["VAPU", "BASELINE"])]
    pub compare: Option<Vec<PathBuf>>,
    /// Per-file features CSV (`file_id,loc,cc,tasks`), required with --compare.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Lower bounds of the LOC bands.
    #[arg(long, value_delimiter = ',', default_value = "100,200,300")]
    pub loc_bands: Vec<usize>,
    /// Also write the comparison as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Transcript files; all transcripts in --output-dir when none are given.
    pub transcripts: Vec<PathBuf>,
    #[arg(long, default_value = "vapu-out")]
    pub output_dir: PathBuf,
}

/// Maps an error to its exit code.
pub fn exit_code(err: &WorkspaceError) -> i32 {
    use WorkspaceError::*;
    match err {
        ConfigInvalid(_) | NoFilesMatched { .. } | RunIdExists(_) | Registry(_) | Prompt(_) | Domain(_) => exit::USAGE,
        Gateway(_) | Fixture(_) => exit::GATEWAY,
        Pipeline { .. } => exit::PIPELINE,
        Io { .. } | StorageFull(_) | CorruptTranscript { .. } => exit::STORAGE,
        Eval(_) | BadInputFile { .. } => exit::EVAL,
        ReplayMismatch { .. } => exit::REPLAY_MISMATCH,
    }
}

/// Parses `args` (program name first) and runs the command, writing results
/// to `out` and diagnostics to stderr. Returns the exit code.
pub fn run_with_output<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            exit_code(&e)
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_output(args, &mut std::io::stdout().lock())
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), WorkspaceError> {
    match command {
        Command::Update(a) => {
            let inputs = batch_inputs(&a.run, Method::Vapu, a.max_feedback_iterations, None)?;
            print_runs(out, &inputs, run_batch(&inputs)?)
        }
        Command::Baseline(a) => {
            let method = match a.mode {
                BaselineModeArg::Zsl => Method::Zsl,
                BaselineModeArg::Osl => Method::Osl,
            };
            let inputs = batch_inputs(&a.run, method, crate::pipeline::FeedbackBudget::DEFAULT_MAX_ITERATIONS, a.example.as_deref())?;
            print_runs(out, &inputs, run_batch(&inputs)?)
        }
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Report(a) => cmd_report(&a, out),
        Command::Replay(a) => cmd_replay(&a, out),
    }
}

fn batch_inputs(a: &RunArgs, method: Method, max_feedback_iterations: u32, example: Option<&Path>) -> Result<BatchInputs, WorkspaceError> {
    let backend = match a.backend {
        BackendArg::Live => Backend::Live,
        BackendArg::Replay => Backend::Replay,
    };
    let mut config = RunConfig::new(a.model.clone(), method, backend, a.output_dir.clone());
    config.params = GenerationParams {
        temperature: a.temperature,
        max_output_tokens: a.max_output_tokens,
        request_timeout_secs: a.timeout,
        max_retries: a.max_retries,
    };
    config.max_feedback_iterations = max_feedback_iterations;
    config.repetitions = a.runs.unwrap_or(if a.pass_at_1 { 1 } else { 10 });
    config.fixtures_dir = a.fixtures.clone();
    config.example = example.map(Path::to_path_buf);
    config.validate()?;

    let registry = match &a.registry {
        Some(p) => ModelRegistry::load(p)?,
        None => ModelRegistry::default_registry(),
    };
    let templates = match &a.templates {
        Some(dir) => TemplateSet::with_overrides_from(dir)?,
        None => TemplateSet::default(),
    };
    let example = match example {
        Some(p) => Some(
            OneShotExample::from_toml_str(&read_text(p)?).map_err(|e| WorkspaceError::BadInputFile {
                path: p.to_path_buf(),
                line: e.span().map_or(0, |s| s.start),
                reason: e.message().to_string(),
            })?,
        ),
        None => None,
    };
    let req_id = a
        .requirements
        .file_stem()
        .map_or("requirements".into(), |s| s.to_string_lossy().into_owned());
    let requirements = RequirementSpec::from_text(req_id, &read_text(&a.requirements)?, RequirementKind::RequirementList)?;
    Ok(BatchInputs {
        config,
        registry,
        files: load_codebase(&a.project, &a.include)?,
        requirements,
        templates,
        example,
        parallel: a.parallel.max(1),
        force: a.force,
    })
}

fn print_runs(out: &mut dyn Write, inputs: &BatchInputs, runs: Vec<crate::workspace::RunSummary>) -> Result<(), WorkspaceError> {
    let io = WorkspaceError::io(Path::new("<stdout>"));
    let mut text = String::new();
    for r in &runs {
        text.push_str(&format!(
            "{}  loc {}  exchanges {}  {:.2}s{}{}\n",
            r.run_id,
            r.final_loc.map_or("-".into(), |l| l.to_string()),
            r.exchanges,
            r.duration_secs,
            if r.unverified { "  unverified" } else { "" },
            if r.truncated { "  truncated" } else { "" },
        ));
    }
    text.push_str(&format!(
        "{} runs written to {}\n",
        runs.len(),
        inputs.config.output_dir.join("transcripts").display()
    ));
    out.write_all(text.as_bytes()).map_err(io)
}

fn parse_checker(spec: &str) -> Result<(String, ExternalCommandChecker), WorkspaceError> {
    let bad = || WorkspaceError::ConfigInvalid(format!("checker `{spec}` is not LANG=COMMAND"));
    let (lang, command) = spec.split_once('=').ok_or_else(bad)?;
    let mut words = command.split_whitespace();
    let program = words.next().ok_or_else(bad)?;
    if lang.trim().is_empty() {
        return Err(bad());
    }
    Ok((lang.trim().to_string(), ExternalCommandChecker::new(program, words)))
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<(), WorkspaceError> {
    let annotations = match &a.annotations {
        Some(p) => load_annotations(p)?,
        None => Annotations::default(),
    };
    let mut checkers = CheckerRegistry::with_defaults();
    for spec in &a.checkers {
        let (lang, checker) = parse_checker(spec)?;
        checkers.register(&lang, checker);
    }
    let records = evaluate(&a.output_dir, &annotations, &checkers)?;
    let mut by_method: BTreeMap<String, Vec<ScoredRecord>> = BTreeMap::new();
    for r in records {
        by_method.entry(r.method.clone()).or_default().push(r);
    }
    let mut text = String::new();
    for (method, recs) in &by_method {
        let path = a.output_dir.join("records").join(format!("{method}.runs"));
        write_records(recs, &path)?;
        let errors: u32 = recs.iter().map(|r| r.errors.total()).sum();
        text.push_str(&format!("{method}: {} runs, {errors} errors -> {}\n", recs.len(), path.display()));
    }
    if by_method.is_empty() {
        text.push_str("no transcripts found\n");
    }
    out.write_all(text.as_bytes()).map_err(WorkspaceError::io(Path::new("<stdout>")))
}

/// Per (method, model, temperature): errors, requirements, LOC and durations,
/// then the preferred temperature per (model, method) where requirements exist.
fn stats_summary(records: &[ScoredRecord]) -> Result<String, WorkspaceError> {
    let mut s = String::new();
    let durations: Vec<f64> = records.iter().map(|r| r.duration_secs).collect();
    let z = normalize_durations(&durations)?;
    let mut groups: BTreeMap<(String, String, String), Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups
            .entry((r.method.clone(), r.model.clone(), format!("{}", r.temperature)))
            .or_default()
            .push(i);
    }
    s.push_str("method  model                 temp  runs  errors mean (sd)  reqs mean  loc mean  time z\n");
    let mut temp_scores = Vec::new();
    for ((method, model, temp), idx) in &groups {
        let pick = |f: &dyn Fn(&ScoredRecord) -> f64| -> Vec<f64> { idx.iter().map(|&i| f(&records[i])).collect() };
        let errors = aggregate_runs(&pick(&|r| f64::from(r.errors.total())))?;
        let loc = aggregate_runs(&pick(&|r| r.loc as f64))?;
        let zs = aggregate_runs(&idx.iter().map(|&i| z[i]).collect::<Vec<_>>())?;
        let reqs: Vec<f64> = idx.iter().filter_map(|&i| records[i].requirements).map(f64::from).collect();
        let reqs_mean = if reqs.len() == idx.len() { Some(aggregate_runs(&reqs)?.mean) } else { None };
        s.push_str(&format!(
            "{method:<7} {model:<21} {temp:>4}  {:>4}  {:>6.2} ({:.2})   {:>9}  {:>8.1}  {:>6.2}\n",
            errors.n,
            errors.mean,
            errors.sd,
            reqs_mean.map_or("-".into(), |m| format!("{m:.2}")),
            loc.mean,
            zs.mean,
        ));
        if let (Some(ar), Ok(t)) = (reqs_mean, temp.parse::<f64>()) {
            temp_scores.push(((model.clone(), method.clone()), TemperatureScore::new(t, ar, errors.mean)));
        }
    }
    if !temp_scores.is_empty() {
        s.push_str("preferred temperature (AR - AE/2):\n");
        for ((model, method), t) in select_temperature_by(temp_scores)? {
            s.push_str(&format!("  {model} {method}: {t}\n"));
        }
    }
    Ok(s)
}

fn method_records(records: &[ScoredRecord], path: &Path) -> Vec<MethodRecord> {
    let with: Vec<_> = records.iter().filter_map(ScoredRecord::to_method_record).collect();
    if with.len() < records.len() {
        log::warn!("{}: {} records have no check marks and are left out", path.display(), records.len() - with.len());
    }
    with
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> Result<(), WorkspaceError> {
    if a.runs.is_empty() && a.compare.is_none() {
        return Err(WorkspaceError::ConfigInvalid("give record files to summarize or --compare VAPU BASELINE".into()));
    }
    let mut text = String::new();
    let mut all = Vec::new();
    for p in &a.runs {
        all.extend(read_records(p)?);
    }
    if !all.is_empty() {
        text.push_str(&stats_summary(&all)?);
    }
    if let Some(pair) = &a.compare {
        let features_path = a
            .features
            .as_deref()
            .ok_or_else(|| WorkspaceError::ConfigInvalid("--compare needs --features".into()))?;
        let bands = LocBands::new(a.loc_bands.clone())
            .ok_or_else(|| WorkspaceError::ConfigInvalid("LOC bands must be positive and increasing".into()))?;
        let features = load_features(features_path)?;
        let vapu = method_records(&read_records(&pair[0])?, &pair[0]);
        let baseline = method_records(&read_records(&pair[1])?, &pair[1]);
        let report = build_comparison_report(&vapu, &baseline, &features, &bands)?;
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&report.summary());
        if let Some(csv_path) = &a.csv {
            std::fs::write(csv_path, report.to_csv()).map_err(WorkspaceError::io(csv_path))?;
        }
    }
    out.write_all(text.as_bytes()).map_err(WorkspaceError::io(Path::new("<stdout>")))
}

fn cmd_replay(a: &ReplayArgs, out: &mut dyn Write) -> Result<(), WorkspaceError> {
    let paths = if a.transcripts.is_empty() {
        let dir = a.output_dir.join("transcripts");
        let mut v: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(WorkspaceError::io(&dir))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        v.sort();
        v
    } else {
        a.transcripts.clone()
    };
    if paths.is_empty() {
        return Err(WorkspaceError::ConfigInvalid("no transcripts to replay".into()));
    }
    let mut text = String::new();
    for p in &paths {
        let r = replay_transcript(p)?;
        text.push_str(&format!("{}: identical ({} exchanges, {} bytes)\n", r.run_id, r.exchanges, r.final_code_bytes));
    }
    out.write_all(text.as_bytes()).map_err(WorkspaceError::io(Path::new("<stdout>")))
}
