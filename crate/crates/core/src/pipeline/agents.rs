use thiserror::Error;

use super::flags;
use super::types::{ChangeRequest, CodeDocument, DomainError, RequirementSpec, Task, TaskPlan, Verdict};
use crate::gateway::{AgentRole, GatewayError, GatewayHandle, GenerationParams};
use crate::prompt::{
    extract_code_detailed, ids, parse_task_list, parse_verdict, Bindings, Placeholder, PromptError, PromptText,
    TemplateSet,
};

/// Used when the verifier still cannot be understood after a re-ask.
pub const GENERIC_CHANGE: &str = "address verifier feedback";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("requirements are empty")]
    EmptyRequirements,
    #[error("manager produced no tasks")]
    UnparseableTaskList,
    #[error("prompt maker returned an empty instruction")]
    EmptyInstruction,
    #[error("{0} response contains no code")]
    NoCodeInResponse(AgentRole),
    #[error("cannot read verifier verdict: {0}")]
    UnparseableVerdict(String),
    #[error("finalizer called without changes")]
    EmptyChangeList,
    #[error("code before (`{before}`) and after (`{after}`) are different files")]
    PathMismatch { before: String, after: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// The five agents bound to one run's gateway, parameters and templates.
#[derive(Debug, Clone, Copy)]
pub struct Agents<'a> {
    pub gateway: &'a GatewayHandle,
    pub params: &'a GenerationParams,
    pub templates: &'a TemplateSet,
}

impl<'a> Agents<'a> {
    pub fn new(gateway: &'a GatewayHandle, params: &'a GenerationParams, templates: &'a TemplateSet) -> Self {
        Self {
            gateway,
            params,
            templates,
        }
    }

    fn ask(&self, role: AgentRole, prompt: &PromptText) -> Result<String, AgentError> {
        let exchange = self.gateway.complete(role, prompt.as_str(), self.params)?;
        Ok(exchange.response.unwrap_or_default())
    }

    fn render(&self, id: &str, bindings: &Bindings) -> Result<PromptText, AgentError> {
        Ok(self.templates.get(id)?.render(bindings)?)
    }

    /// Manager draft followed by exactly one reflection exchange.
    ///
    /// The reflected list wins when it parses; otherwise the draft is kept.
    /// Only when neither exchange yields a task is the plan unparseable.
    pub fn plan_tasks(&self, req: &RequirementSpec, code: &CodeDocument) -> Result<TaskPlan, AgentError> {
        if req.body().iter().all(|l| l.trim().is_empty()) {
            return Err(AgentError::EmptyRequirements);
        }
        let requirements = req.text();
        let draft_prompt = self.render(
            ids::MANAGER_PLAN,
            &Bindings::new()
                .with(Placeholder::Requirements, requirements.as_str())
                .with(Placeholder::Code, code.content()),
        )?;
        let draft_response = self.ask(AgentRole::Manager, &draft_prompt)?;
        let draft = parse_task_list(&draft_response).ok();
        let draft_text = match &draft {
            Some(plan) => plan.serialize(),
            None => draft_response.trim().to_string(),
        };
        let reflect_prompt = self.render(
            ids::MANAGER_REFLECT,
            &Bindings::new()
                .with(Placeholder::Requirements, requirements)
                .with(Placeholder::Tasks, draft_text),
        )?;
        let reflected = parse_task_list(&self.ask(AgentRole::Manager, &reflect_prompt)?).ok();
        reflected
            .or(draft)
            .map(TaskPlan::mark_reflected)
            .ok_or(AgentError::UnparseableTaskList)
    }

    /// The prompt maker's instruction for one task, used verbatim by the executor.
    pub fn make_task_prompt(
        &self,
        req: &RequirementSpec,
        task: &Task,
        code: &CodeDocument,
    ) -> Result<PromptText, AgentError> {
        let prompt = self.render(
            ids::PROMPT_MAKER,
            &Bindings::new()
                .with(Placeholder::Requirements, req.text())
                .with(Placeholder::Task, task.description())
                .with(Placeholder::Code, code.content()),
        )?;
        let instruction = self.ask(AgentRole::PromptMaker, &prompt)?;
        if instruction.trim().is_empty() {
            return Err(AgentError::EmptyInstruction);
        }
        Ok(PromptText::new(instruction.trim().to_string(), ids::PROMPT_MAKER)?)
    }

    /// Sends a code-producing prompt and extracts the code. A response cut off
    /// inside a fence is flagged `truncated` and asked once more.
    pub(crate) fn produce_code(&self, role: AgentRole, prompt: &PromptText, base: &CodeDocument) -> Result<CodeDocument, AgentError> {
        let mut attempt = 0;
        loop {
            let response = self.ask(role, prompt)?;
            let extraction = match extract_code_detailed(&response) {
                Ok(e) => e,
                Err(PromptError::EmptyResponse) => return Err(AgentError::NoCodeInResponse(role)),
                Err(other) => return Err(other.into()),
            };
            if !extraction.fenced {
                self.gateway.flag_last(flags::NO_FENCE);
            }
            if extraction.unbalanced {
                self.gateway.flag_last(flags::TRUNCATED);
                if attempt == 0 {
                    attempt += 1;
                    continue;
                }
            }
            if extraction.code.trim().is_empty() {
                return Err(AgentError::NoCodeInResponse(role));
            }
            return Ok(base.with_content(extraction.code));
        }
    }

    /// Runs one instruction against the current code.
    pub fn execute_task(&self, instruction: &PromptText, code: &CodeDocument) -> Result<CodeDocument, AgentError> {
        if instruction.as_str().trim().is_empty() {
            return Err(AgentError::EmptyInstruction);
        }
        let prompt = self.render(
            ids::EXECUTOR,
            &Bindings::new()
                .with(Placeholder::Task, instruction.as_str())
                .with(Placeholder::Code, code.content()),
        )?;
        self.produce_code(AgentRole::Executor, &prompt, code)
    }

    /// Asks the verifier whether `after` completes `task` relative to `before`.
    pub fn verify_task(
        &self,
        req: &RequirementSpec,
        task: &Task,
        before: &CodeDocument,
        after: &CodeDocument,
    ) -> Result<Verdict, AgentError> {
        if before.path() != after.path() {
            return Err(AgentError::PathMismatch {
                before: before.path().to_string(),
                after: after.path().to_string(),
            });
        }
        let prompt = self.render(
            ids::VERIFIER,
            &Bindings::new()
                .with(Placeholder::Requirements, req.text())
                .with(Placeholder::Task, task.description())
                .with(Placeholder::CodeBefore, before.content())
                .with(Placeholder::CodeAfter, after.content()),
        )?;
        let response = self.ask(AgentRole::Verifier, &prompt)?;
        parse_verdict(&response).map_err(|err| {
            self.gateway.flag_last(flags::UNPARSEABLE_VERDICT);
            match err {
                PromptError::UnparseableVerdict(msg) => AgentError::UnparseableVerdict(msg),
                other => other.into(),
            }
        })
    }

    /// Verifies, re-asking once on an unreadable verdict and then falling back
    /// to a generic rejection.
    pub fn verify_with_fallback(
        &self,
        req: &RequirementSpec,
        task: &Task,
        before: &CodeDocument,
        after: &CodeDocument,
    ) -> Result<Verdict, AgentError> {
        match self.verify_task(req, task, before, after) {
            Err(AgentError::UnparseableVerdict(_)) => match self.verify_task(req, task, before, after) {
                Err(AgentError::UnparseableVerdict(_)) => {
                    self.gateway.flag_last(flags::GENERIC_REJECTION);
                    Ok(generic_rejection())
                }
                other => other,
            },
            other => other,
        }
    }

    /// Applies the verifier's change list to the code.
    pub fn finalize_code(&self, code: &CodeDocument, changes: &[ChangeRequest]) -> Result<CodeDocument, AgentError> {
        if changes.is_empty() {
            return Err(AgentError::EmptyChangeList);
        }
        let change_list = changes
            .iter()
            .map(|c| format!("- {}", c.description()))
            .collect::<Vec<_>>()
            .join("\n");
        let prompt = self.render(
            ids::FINALIZER,
            &Bindings::new()
                .with(Placeholder::Changes, change_list)
                .with(Placeholder::Code, code.content()),
        )?;
        self.produce_code(AgentRole::Finalizer, &prompt, code)
    }
}

fn generic_rejection() -> Verdict {
    let change = ChangeRequest::new(GENERIC_CHANGE).expect("constant is non-empty");
    Verdict::reject(vec![change]).expect("one change")
}

impl From<DomainError> for AgentError {
    fn from(err: DomainError) -> Self {
        match err {
            DomainError::EmptyRequirements(_) => AgentError::EmptyRequirements,
            DomainError::EmptyChangeList => AgentError::EmptyChangeList,
            _ => AgentError::UnparseableTaskList,
        }
    }
}
