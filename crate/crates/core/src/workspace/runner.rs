use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use super::{
    file_key, load_transcript, persist_transcript, run_id, transcript_path, Annotations, Backend, ErrorCounts, Method,
    RunConfig, RunOutcome, RunTranscript, ScoredRecord, TranscriptHeader, WorkspaceError,
};
use crate::eval::{check_fatal, score_requirements, CheckerRegistry, EvalError, RunErrorLedger};
use crate::gateway::{
    load_replay_fixtures, AgentRole, ChatBackend, GatewayHandle, LiveBackend, ModelProfile, ModelRegistry,
    ReplayBackend, ReplayFixtureSet, RetryPolicy,
};
use crate::pipeline::{run_update, Agents, CodeDocument, PipelineError, RequirementSpec, UpdateSettings};
use crate::prompt::{build_baseline_prompt, BaselineMode, OneShotExample, PromptTemplate, TemplateSet};

/// Everything one `update` or `baseline` batch needs.
#[derive(Debug, Clone)]
pub struct BatchInputs {
    pub config: RunConfig,
    pub registry: ModelRegistry,
    pub files: Vec<CodeDocument>,
    pub requirements: RequirementSpec,
    pub templates: TemplateSet,
    pub example: Option<OneShotExample>,
    /// Concurrent runs; 1 runs everything in order on the calling thread.
    pub parallel: usize,
    /// Overwrite transcripts whose run id already exists.
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run_id: String,
    pub transcript: PathBuf,
    pub final_loc: Option<usize>,
    pub unverified: bool,
    pub truncated: bool,
    pub exchanges: usize,
    pub duration_secs: f64,
}

/// A gateway for one run. Replay fixtures come from `<fixtures>/<file-key>/`
/// when that directory exists, otherwise from `<fixtures>/` itself.
pub fn make_gateway(config: &RunConfig, profile: &ModelProfile, file: &CodeDocument) -> Result<GatewayHandle, WorkspaceError> {
    let backend: Arc<dyn ChatBackend> = match config.backend {
        Backend::Live => Arc::new(LiveBackend::new()),
        Backend::Replay => Arc::new(ReplayBackend::new(replay_fixtures(config, file)?)),
    };
    Ok(gateway_for(backend, config.backend, profile))
}

fn gateway_for(backend: Arc<dyn ChatBackend>, kind: Backend, profile: &ModelProfile) -> GatewayHandle {
    let handle = GatewayHandle::new(backend, profile.clone());
    match kind {
        Backend::Live => handle,
        Backend::Replay => handle.with_retry_policy(RetryPolicy::immediate()),
    }
}

fn replay_fixtures(config: &RunConfig, file: &CodeDocument) -> Result<ReplayFixtureSet, WorkspaceError> {
    let root = config
        .fixtures_dir
        .as_deref()
        .ok_or_else(|| WorkspaceError::ConfigInvalid("the replay backend needs a fixtures directory".into()))?;
    let per_file = root.join(file_key(file.path()));
    let dir = if per_file.is_dir() { per_file } else { root.to_path_buf() };
    Ok(load_replay_fixtures(&dir)?)
}

struct Job<'a> {
    file: &'a CodeDocument,
    repetition: u32,
    run_id: String,
}

/// Runs every file `config.repetitions` times with the configured method and
/// writes one transcript per run. Runs are independent: each gets its own
/// gateway handle, so no exchange is shared between repetitions.
///
/// A failing run still leaves its partial transcript; the first failure is
/// returned once all runs have finished.
pub fn run_batch(inputs: &BatchInputs) -> Result<Vec<RunSummary>, WorkspaceError> {
    let config = &inputs.config;
    for w in config.validate()? {
        log::warn!("{w}");
    }
    if config.method == Method::Osl && inputs.example.is_none() {
        return Err(WorkspaceError::ConfigInvalid("one-shot runs need an example".into()));
    }
    let profile = inputs.registry.resolve(&config.model)?.clone();
    if profile.context_length_placeholder {
        log::info!("context length for {} is a placeholder value", profile.profile_id);
    }

    let mut jobs = Vec::new();
    for file in &inputs.files {
        for repetition in 1..=config.repetitions {
            let id = run_id(file.path(), config, repetition);
            if !inputs.force && transcript_path(&config.output_dir, &id).exists() {
                return Err(WorkspaceError::RunIdExists(id));
            }
            jobs.push(Job {
                file,
                repetition,
                run_id: id,
            });
        }
    }

    // One backend per file: live backends are shared, fixtures load once.
    let mut backends: HashMap<&str, Arc<dyn ChatBackend>> = HashMap::new();
    let live: Arc<dyn ChatBackend> = Arc::new(LiveBackend::new());
    for file in &inputs.files {
        let backend = match config.backend {
            Backend::Live => live.clone(),
            Backend::Replay => Arc::new(ReplayBackend::new(replay_fixtures(config, file)?)) as Arc<dyn ChatBackend>,
        };
        backends.insert(file.path(), backend);
    }

    let run = |job: &Job<'_>| {
        let gateway = gateway_for(backends[job.file.path()].clone(), config.backend, &profile);
        execute_run(inputs, &profile, job, gateway)
    };

    let workers = inputs.parallel.clamp(1, jobs.len().max(1));
    let results: Vec<Result<RunSummary, WorkspaceError>> = if workers == 1 {
        jobs.iter().map(run).collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<RunSummary, WorkspaceError>>>> =
            Mutex::new((0..jobs.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(job) = jobs.get(i) else { break };
                    let result = run(job);
                    slots.lock().expect("result slots")[i] = Some(result);
                });
            }
        });
        slots
            .into_inner()
            .expect("result slots")
            .into_iter()
            .map(|r| r.expect("every job ran"))
            .collect()
    };

    let mut summaries = Vec::with_capacity(results.len());
    let mut first_error = None;
    for r in results {
        match r {
            Ok(s) => summaries.push(s),
            Err(e) => {
                log::error!("{e}");
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(summaries),
    }
}

fn execute_run(inputs: &BatchInputs, profile: &ModelProfile, job: &Job<'_>, gateway: GatewayHandle) -> Result<RunSummary, WorkspaceError> {
    let config = &inputs.config;
    let header = TranscriptHeader {
        run_id: job.run_id.clone(),
        config: config.clone(),
        repetition: job.repetition,
        profile: profile.clone(),
        requirements: inputs.requirements.text(),
        original_code: job.file.clone(),
        templates: inputs.templates.iter().map(PromptTemplate::to_asset).collect(),
        example: inputs.example.clone(),
    };
    log::info!("starting {}", job.run_id);
    let started = Instant::now();
    let result = perform(&header, &inputs.requirements, &inputs.templates, &gateway);
    let duration_secs = started.elapsed().as_secs_f64();

    let (outcome, failure) = match result {
        Ok(outcome) => (outcome, None),
        Err(e) => {
            let task_index = match &e {
                PipelineError::AbortedRun { task_index, .. } => *task_index,
                PipelineError::InvalidSettings(_) => None,
            };
            let outcome = RunOutcome::Aborted {
                task_index,
                error: e.to_string(),
            };
            (outcome, Some(e))
        }
    };
    let transcript = RunTranscript {
        header,
        exchanges: gateway.into_exchanges(),
        outcome,
        duration_secs,
    };
    let path = persist_transcript(&transcript, &config.output_dir, inputs.force)?;
    if let Some(source) = failure {
        return Err(WorkspaceError::Pipeline {
            run_id: job.run_id.clone(),
            source,
        });
    }
    Ok(summarize(&transcript, path))
}

fn summarize(t: &RunTranscript, path: PathBuf) -> RunSummary {
    let (unverified, truncated) = match &t.outcome {
        RunOutcome::Update(r) => (r.unverified, r.truncated),
        RunOutcome::Baseline { truncated, .. } => (false, *truncated),
        RunOutcome::Aborted { .. } => (false, false),
    };
    RunSummary {
        run_id: t.run_id().to_string(),
        transcript: path,
        final_loc: t.outcome.final_code().map(CodeDocument::loc),
        unverified,
        truncated,
        exchanges: t.exchanges.len(),
        duration_secs: t.duration_secs,
    }
}

/// One run of the method named in `header`.
fn perform(
    header: &TranscriptHeader,
    requirements: &RequirementSpec,
    templates: &TemplateSet,
    gateway: &GatewayHandle,
) -> Result<RunOutcome, PipelineError> {
    let config = &header.config;
    let code = &header.original_code;
    match config.method {
        Method::Vapu => {
            let settings = UpdateSettings {
                params: config.params.clone(),
                max_feedback_iterations: config.max_feedback_iterations,
                templates: templates.clone(),
                run_id: header.run_id.clone(),
            };
            run_update(requirements, code, gateway, &settings).map(RunOutcome::Update)
        }
        Method::Zsl | Method::Osl => {
            let abort = |e: crate::pipeline::AgentError| PipelineError::AbortedRun {
                task_index: None,
                source: e,
            };
            let mode = match (&header.example, config.method) {
                (Some(ex), Method::Osl) => BaselineMode::OneShot(ex.clone()),
                _ => BaselineMode::ZeroShot,
            };
            let prompt = build_baseline_prompt(templates, &mode, &requirements.text(), code)
                .map_err(|e| abort(e.into()))?;
            let agents = Agents::new(gateway, &config.params, templates);
            let final_code = agents.produce_code(AgentRole::Baseline, &prompt, code).map_err(abort)?;
            let truncated = gateway
                .exchanges()
                .iter()
                .any(|ex| ex.has_flag(crate::pipeline::flags::TRUNCATED));
            Ok(RunOutcome::Baseline { final_code, truncated })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub run_id: String,
    pub exchanges: usize,
    pub final_code_bytes: usize,
}

/// Re-runs a transcript against fixtures rebuilt from its own exchanges and
/// checks that the outcome is byte-identical.
pub fn replay_transcript(path: &Path) -> Result<ReplayReport, WorkspaceError> {
    let t = load_transcript(path)?;
    let header = &t.header;
    let mut templates = TemplateSet::empty();
    for asset in &header.templates {
        templates.insert(PromptTemplate::parse_asset(asset)?)?;
    }
    let requirements = RequirementSpec::from_text("replay", &header.requirements, crate::pipeline::RequirementKind::RequirementList)?;
    let fixtures = ReplayFixtureSet::from_exchanges(&t.exchanges)?;
    let gateway = gateway_for(Arc::new(ReplayBackend::new(fixtures)), Backend::Replay, &header.profile);

    let outcome = match perform(header, &requirements, &templates, &gateway) {
        Ok(o) => o,
        Err(e) => {
            let task_index = match &e {
                PipelineError::AbortedRun { task_index, .. } => *task_index,
                PipelineError::InvalidSettings(_) => None,
            };
            RunOutcome::Aborted {
                task_index,
                error: e.to_string(),
            }
        }
    };
    let mismatch = |detail: String| WorkspaceError::ReplayMismatch {
        run_id: header.run_id.clone(),
        detail,
    };
    let replayed = gateway.into_exchanges();
    if replayed.len() != t.exchanges.len() {
        return Err(mismatch(format!("{} exchanges recorded, {} replayed", t.exchanges.len(), replayed.len())));
    }
    for (a, b) in t.exchanges.iter().zip(&replayed) {
        if (a.role, a.role_index, &a.prompt, &a.response) != (b.role, b.role_index, &b.prompt, &b.response) {
            return Err(mismatch(format!("exchange {} ({} #{}) differs", a.seq, a.role, a.role_index)));
        }
    }
    match (&t.outcome, &outcome) {
        (RunOutcome::Update(a), RunOutcome::Update(b)) => {
            if a.final_code.content().as_bytes() != b.final_code.content().as_bytes() {
                return Err(mismatch("final code differs".into()));
            }
            if (&a.per_task_outcomes, a.unverified, a.truncated) != (&b.per_task_outcomes, b.unverified, b.truncated) {
                return Err(mismatch("task outcomes differ".into()));
            }
        }
        (a, b) if a != b => return Err(mismatch("outcome differs".into())),
        _ => {}
    }
    Ok(ReplayReport {
        run_id: header.run_id.clone(),
        exchanges: replayed.len(),
        final_code_bytes: outcome.final_code().map_or(0, |c| c.content().len()),
    })
}

/// Scores every transcript under `<output_dir>/transcripts`, in file name order.
///
/// Automated syntax findings are recorded before annotated ones, so an
/// annotation repeating a checker's cause key does not count twice.
pub fn evaluate(
    output_dir: &Path,
    annotations: &Annotations,
    checkers: &CheckerRegistry,
) -> Result<Vec<ScoredRecord>, WorkspaceError> {
    let dir = output_dir.join("transcripts");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(WorkspaceError::io(&dir))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    paths.sort();
    let mut records = Vec::with_capacity(paths.len());
    for path in paths {
        let t = load_transcript(&path)?;
        records.push(score_transcript(&t, annotations, checkers)?);
    }
    let known: std::collections::HashSet<&str> = records.iter().map(|r| r.run_id.as_str()).collect();
    for id in annotations.run_ids() {
        if !known.contains(id) {
            log::warn!("annotations mention unknown run `{id}`");
        }
    }
    Ok(records)
}

fn score_transcript(t: &RunTranscript, annotations: &Annotations, checkers: &CheckerRegistry) -> Result<ScoredRecord, WorkspaceError> {
    let h = &t.header;
    let mut ledger = RunErrorLedger::new(h.run_id.clone());
    if let Some(code) = t.outcome.final_code() {
        match check_fatal(code, checkers) {
            Ok(found) => found.into_iter().for_each(|f| {
                ledger.record(f);
            }),
            Err(EvalError::CheckerUnavailable(lang)) => log::debug!("no syntax checker for {lang}, skipping"),
            Err(e) => return Err(e.into()),
        }
    }
    for f in annotations.findings(&h.run_id) {
        ledger.record(f.clone());
    }
    let reqs = annotations.requirements(&h.run_id);
    let requirements = if reqs.is_empty() { None } else { Some(score_requirements(reqs)?) };
    let file_id = file_key(h.original_code.path());
    let method = h.config.method.as_str();
    let (unverified, truncated) = match &t.outcome {
        RunOutcome::Update(r) => (r.unverified, r.truncated),
        RunOutcome::Baseline { truncated, .. } => (false, *truncated),
        RunOutcome::Aborted { .. } => (false, false),
    };
    Ok(ScoredRecord {
        run_id: h.run_id.clone(),
        checkmarks: annotations.checkmarks(&h.run_id, &file_id, method, &h.config.model),
        file_id,
        method: method.to_string(),
        model: h.config.model.clone(),
        temperature: h.config.temperature(),
        repetition: h.repetition,
        duration_secs: t.duration_secs,
        loc: t.outcome.final_code().map_or(0, CodeDocument::loc),
        errors: ErrorCounts::from_findings(ledger.findings()),
        findings: ledger.findings().cloned().collect(),
        requirements,
        unverified,
        truncated,
        aborted: matches!(t.outcome, RunOutcome::Aborted { .. }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::AgentRole::*;
    use crate::pipeline::RequirementKind;

    const PLAN: &str = "1. Replace the old helper\n2. Use short echo tags";

    fn write_fixtures(dir: &Path) {
        ReplayFixtureSet::from_sequences([
            (Manager, vec![PLAN, PLAN]),
            (PromptMaker, vec!["Use the new helper.", "Use <?= ?>."]),
            (Executor, vec!["```php\n<?php echo $this->Html->link('a'); ?>\n```", "```php\n<?= $this->Html->link('a') ?>\n```"]),
            (Verifier, vec!["ACCEPT", "REJECT:\n- keep the link text", "ACCEPT"]),
            (Finalizer, vec!["```php\n<?= $this->Html->link('a', '/') ?>\n```"]),
            (Baseline, vec!["```php\n<?= $this->Html->link('a') ?>\n```"]),
        ])
        .write_dir(dir)
        .unwrap();
    }

    fn inputs(root: &Path, method: Method, repetitions: u32, parallel: usize) -> BatchInputs {
        let fixtures = root.join("fixtures");
        write_fixtures(&fixtures);
        let mut config = RunConfig::new("gpt-4o-mini", method, Backend::Replay, root.join("out"));
        config.fixtures_dir = Some(fixtures);
        config.repetitions = repetitions;
        BatchInputs {
            config,
            registry: ModelRegistry::default_registry(),
            files: vec![CodeDocument::from_path("views/index.ctp", "<?php echo $html->link('a'); ?>")],
            requirements: RequirementSpec::from_text("req", "Update to CakePHP 5", RequirementKind::RequirementList).unwrap(),
            templates: TemplateSet::default(),
            example: None,
            parallel,
            force: false,
        }
    }

    #[test]
    fn update_batch_writes_distinct_transcripts_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let inputs = inputs(dir.path(), Method::Vapu, 10, 4);
        let runs = run_batch(&inputs).unwrap();
        assert_eq!(runs.len(), 10);
        let ids: std::collections::HashSet<_> = runs.iter().map(|r| r.run_id.clone()).collect();
        assert_eq!(ids.len(), 10);
        assert!(runs.iter().all(|r| r.exchanges == 10 && !r.unverified));
        let t = load_transcript(&runs[3].transcript).unwrap();
        assert_eq!(t.header.repetition, 4);
        assert_eq!(t.exchanges.first().unwrap().seq, 0);
        assert_eq!(
            t.outcome.final_code().unwrap().content(),
            "<?= $this->Html->link('a', '/') ?>"
        );
        for r in &runs {
            replay_transcript(&r.transcript).unwrap();
        }
        assert!(matches!(run_batch(&inputs), Err(WorkspaceError::RunIdExists(_))));
    }

    #[test]
    fn baseline_and_evaluation() {
        let dir = tempfile::tempdir().unwrap();
        let inputs = inputs(dir.path(), Method::Zsl, 1, 1);
        let runs = run_batch(&inputs).unwrap();
        assert_eq!(runs[0].run_id, "views_index-zsl-gpt-4o-mini-t0-r1");
        assert_eq!(runs[0].exchanges, 1);
        replay_transcript(&runs[0].transcript).unwrap();

        let ann_path = dir.path().join("ann.jsonl");
        std::fs::write(
            &ann_path,
            "{\"kind\":\"finding\",\"run_id\":\"views_index-zsl-gpt-4o-mini-t0-r1\",\"category\":\"Content\",\"cause_key\":\"link target lost\"}\n\
             {\"kind\":\"requirement\",\"run_id\":\"views_index-zsl-gpt-4o-mini-t0-r1\",\"requirement_id\":\"R1\",\"value\":1}\n",
        )
        .unwrap();
        let ann = crate::workspace::load_annotations(&ann_path).unwrap();
        let records = evaluate(&inputs.config.output_dir, &ann, &CheckerRegistry::with_defaults()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].errors.content, 1);
        assert_eq!(records[0].errors.fatal, 0);
        assert_eq!(records[0].requirements, Some(1));
        assert_eq!(records[0].file_id, "views_index");
    }

    #[test]
    fn aborted_run_keeps_partial_transcript() {
        let dir = tempfile::tempdir().unwrap();
        let mut inputs = inputs(dir.path(), Method::Vapu, 1, 1);
        let fixtures = dir.path().join("short");
        ReplayFixtureSet::from_sequences([(Manager, vec![PLAN, PLAN])]).write_dir(&fixtures).unwrap();
        inputs.config.fixtures_dir = Some(fixtures);
        let err = run_batch(&inputs).unwrap_err();
        assert!(matches!(
            err,
            WorkspaceError::Pipeline { source: PipelineError::AbortedRun { task_index: Some(1), .. }, .. }
        ));
        let path = transcript_path(&inputs.config.output_dir, "views_index-vapu-gpt-4o-mini-t0-r1");
        let t = load_transcript(&path).unwrap();
        assert!(matches!(t.outcome, RunOutcome::Aborted { task_index: Some(1), .. }));
        assert_eq!(t.exchanges.len(), 3);
        // The aborted run replays to the same abort.
        replay_transcript(&path).unwrap();
    }

    #[test]
    fn tampered_replay_diverges() {
        let dir = tempfile::tempdir().unwrap();
        let inputs = inputs(dir.path(), Method::Vapu, 1, 1);
        let runs = run_batch(&inputs).unwrap();
        let mut t = load_transcript(&runs[0].transcript).unwrap();
        if let RunOutcome::Update(r) = &mut t.outcome {
            r.final_code = r.final_code.with_content("<?= 'changed' ?>");
        }
        persist_transcript(&t, &inputs.config.output_dir, true).unwrap();
        assert!(matches!(
            replay_transcript(&runs[0].transcript),
            Err(WorkspaceError::ReplayMismatch { .. })
        ));
    }
}
