//! Agent prompt templates, baseline (zero-/one-shot) prompts, and parsers for
//! everything the agents send back.

mod baseline;
mod extract;
mod parse;
mod template;

use thiserror::Error;

pub use baseline::{build_baseline_prompt, BaselineMode, OneShotExample, EXAMPLE_SECTION_END, EXAMPLE_SECTION_START};
pub use extract::{extract_code, extract_code_detailed, Extraction};
pub use parse::{
    parse_agent_output, parse_task_list, parse_verdict, AgentOutput, ACCEPT_KEYWORD, REJECT_KEYWORD,
};
pub use template::{ids, render_template, Bindings, Placeholder, PromptTemplate, PromptText, TemplateSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("no binding for placeholder `{{{{{0}}}}}`")]
    MissingBinding(String),
    #[error("unknown placeholder `{0}`")]
    UnknownPlaceholder(String),
    #[error("placeholder opened at byte {0} is never closed")]
    UnterminatedPlaceholder(usize),
    #[error("template `{0}` rendered to an empty prompt")]
    EmptyRender(String),
    #[error("malformed template header `{0}`")]
    MalformedAsset(String),
    #[error("template `{0}` is defined twice")]
    DuplicateTemplate(String),
    #[error("no template with id `{0}`")]
    MissingTemplate(String),
    #[error("one-shot prompt needs an example")]
    ExampleMissing,
    #[error("zero-shot prompt must not carry an example")]
    ExampleForbidden,
    #[error("response is empty")]
    EmptyResponse,
    #[error("no tasks found in manager response")]
    UnparseableTaskList,
    #[error("cannot read verdict from verifier response: {0}")]
    UnparseableVerdict(String),
    #[error("role `{0}` has no structured output")]
    UnsupportedRole(String),
    #[error("template I/O: {0}")]
    Io(String),
}

impl From<std::io::Error> for PromptError {
    fn from(err: std::io::Error) -> Self {
        PromptError::Io(err.to_string())
    }
}
