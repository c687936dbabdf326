use thiserror::Error;

use super::agents::{AgentError, Agents};
use super::flags;
use super::types::{CodeDocument, DomainError, FeedbackBudget, RequirementSpec, TaskOutcome, UpdateResult};
use crate::gateway::{GatewayHandle, GenerationParams};
use crate::prompt::TemplateSet;

/// Everything a run needs besides its inputs and gateway.
#[derive(Debug, Clone)]
pub struct UpdateSettings {
    pub params: GenerationParams,
    /// Verifier/finalizer iterations allowed per task.
    pub max_feedback_iterations: u32,
    pub templates: TemplateSet,
    /// Stored in the result as `transcript_ref`.
    pub run_id: String,
}

impl Default for UpdateSettings {
    fn default() -> Self {
        Self {
            params: GenerationParams::default(),
            max_feedback_iterations: FeedbackBudget::DEFAULT_MAX_ITERATIONS,
            templates: TemplateSet::default(),
            run_id: "run".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    /// An agent failed; `task_index` is `None` when planning failed.
    #[error("run aborted {}: {source}", match .task_index { Some(i) => format!("at task {i}"), None => "while planning".to_string() })]
    AbortedRun {
        task_index: Option<usize>,
        #[source]
        source: AgentError,
    },
    #[error(transparent)]
    InvalidSettings(#[from] DomainError),
}

/// Runs the whole pipeline over one file.
///
/// The manager plans once. Each task then goes prompt maker, executor,
/// verifier; a rejection enters the finalizer/verifier loop until the verifier
/// accepts or the feedback budget runs out, in which case the last finalizer
/// output is kept and the result is marked unverified. Every exchange stays in
/// `gateway`'s log, including after an abort.
pub fn run_update(
    req: &RequirementSpec,
    code: &CodeDocument,
    gateway: &GatewayHandle,
    settings: &UpdateSettings,
) -> Result<UpdateResult, PipelineError> {
    FeedbackBudget::new(settings.max_feedback_iterations)?;
    let agents = Agents::new(gateway, &settings.params, &settings.templates);
    let abort = |task_index: Option<usize>| move |source| PipelineError::AbortedRun { task_index, source };

    let plan = agents.plan_tasks(req, code).map_err(abort(None))?;
    debug_assert!(plan.is_reflected());

    let mut current = code.clone();
    let mut outcomes = Vec::with_capacity(plan.len());
    for task in plan.tasks() {
        let at = abort(Some(task.index()));
        let before = current.clone();
        let instruction = agents.make_task_prompt(req, task, &current).map_err(at)?;
        let mut after = agents.execute_task(&instruction, &current).map_err(at)?;
        let mut verdict = agents.verify_with_fallback(req, task, &before, &after).map_err(at)?;
        let mut budget = FeedbackBudget::new(settings.max_feedback_iterations)?;
        while !verdict.is_accepted() && budget.try_consume() {
            after = agents.finalize_code(&after, verdict.changes()).map_err(at)?;
            verdict = agents.verify_with_fallback(req, task, &before, &after).map_err(at)?;
        }
        log::debug!(
            "task {} {} after {} finalizer iterations",
            task.index(),
            if verdict.is_accepted() { "accepted" } else { "unverified" },
            budget.used()
        );
        outcomes.push(TaskOutcome {
            task_index: task.index(),
            accepted: verdict.is_accepted(),
            finalizer_iterations: budget.used(),
        });
        current = after;
    }

    let truncated = gateway
        .exchanges()
        .iter()
        .any(|ex| ex.has_flag(flags::TRUNCATED));
    Ok(UpdateResult {
        final_code: current,
        unverified: outcomes.iter().any(|o| !o.accepted),
        per_task_outcomes: outcomes,
        truncated,
        transcript_ref: settings.run_id.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{AgentRole, ModelRegistry, ReplayBackend, ReplayFixtureSet};
    use crate::pipeline::RequirementKind;
    use std::sync::Arc;

    fn run(fixtures: ReplayFixtureSet) -> (Result<UpdateResult, PipelineError>, GatewayHandle) {
        let profile = ModelRegistry::default_registry().resolve("deepseek-v3").unwrap().clone();
        let gw = GatewayHandle::new(Arc::new(ReplayBackend::new(fixtures)), profile);
        let req = RequirementSpec::from_text("r", "Update to CakePHP 4.5", RequirementKind::RequirementList).unwrap();
        let code = CodeDocument::from_path("v.ctp", "<?php echo $old; ?>");
        (run_update(&req, &code, &gw, &UpdateSettings::default()), gw)
    }

    #[test]
    fn one_rejection_then_acceptance() {
        let fixtures = ReplayFixtureSet::from_sequences([
            (AgentRole::Manager, vec!["1. A\n2. B", "1. A\n2. B"]),
            (AgentRole::PromptMaker, vec!["do A", "do B"]),
            (AgentRole::Executor, vec!["```\nA1\n```", "```\nB1\n```"]),
            (AgentRole::Verifier, vec!["REJECT:\n- finish A", "ACCEPT", "ACCEPT"]),
            (AgentRole::Finalizer, vec!["```\nA2\n```"]),
        ]);
        let (result, gw) = run(fixtures);
        let result = result.unwrap();
        assert_eq!(
            result.per_task_outcomes,
            vec![
                TaskOutcome { task_index: 1, accepted: true, finalizer_iterations: 1 },
                TaskOutcome { task_index: 2, accepted: true, finalizer_iterations: 0 },
            ]
        );
        assert!(!result.unverified);
        assert_eq!(result.final_code.content(), "B1");
        // Task 2's executor worked on the finalized output of task 1.
        let log = gw.exchanges();
        let exec2 = log.iter().filter(|e| e.role == AgentRole::Executor).nth(1).unwrap();
        assert!(exec2.prompt.contains("A2"));
    }

    #[test]
    fn abort_names_the_failing_task() {
        let fixtures = ReplayFixtureSet::from_sequences([
            (AgentRole::Manager, vec!["1. A\n2. B", "1. A\n2. B"]),
            (AgentRole::PromptMaker, vec!["do A", "do B"]),
            (AgentRole::Executor, vec!["```\nA1\n```"]),
            (AgentRole::Verifier, vec!["ACCEPT"]),
        ]);
        let (result, gw) = run(fixtures);
        match result {
            Err(PipelineError::AbortedRun { task_index: Some(2), source: AgentError::Gateway(_) }) => {}
            other => panic!("unexpected {other:?}"),
        }
        // Partial log: 2 manager + 2 prompt maker + 2 executor (one failed) + 1 verifier.
        let log = gw.exchanges();
        assert_eq!(log.len(), 7);
        assert!(log.last().unwrap().error.is_some());
    }

    #[test]
    fn planning_failure_has_no_task_index() {
        let (result, _) = run(ReplayFixtureSet::from_sequences([(AgentRole::Manager, vec!["?", "?"])]));
        assert!(matches!(
            result,
            Err(PipelineError::AbortedRun { task_index: None, source: AgentError::UnparseableTaskList })
        ));
    }

    #[test]
    fn zero_budget_is_rejected() {
        let profile = ModelRegistry::default_registry().resolve("gpt-4o").unwrap().clone();
        let gw = GatewayHandle::new(Arc::new(ReplayBackend::new(ReplayFixtureSet::default())), profile);
        let req = RequirementSpec::from_text("r", "x", RequirementKind::RequirementList).unwrap();
        let code = CodeDocument::from_path("v.ctp", "x");
        let settings = UpdateSettings {
            max_feedback_iterations: 0,
            ..Default::default()
        };
        assert!(matches!(
            run_update(&req, &code, &gw, &settings),
            Err(PipelineError::InvalidSettings(DomainError::ZeroBudget))
        ));
        assert!(gw.exchanges().is_empty());
    }
}
