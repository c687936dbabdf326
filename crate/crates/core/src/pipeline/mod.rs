//! The update pipeline: manager, prompt maker, executor, verifier and
//! finalizer agents around a bounded feedback loop.

mod agents;
mod run;
mod types;

pub use agents::{AgentError, Agents, GENERIC_CHANGE};
pub use run::{run_update, PipelineError, UpdateSettings};
pub use types::{
    language_for_path, ChangeRequest, CodeDocument, DomainError, FeedbackBudget, RequirementKind,
    RequirementSpec, Task, TaskOutcome, TaskPlan, UpdateResult, Verdict,
};

/// Exchange flags written into transcripts.
pub mod flags {
    /// The response had no fenced block; the whole reply was taken as code.
    pub const NO_FENCE: &str = "no_fence";
    /// The response ended inside an open fence.
    pub const TRUNCATED: &str = "truncated";
    pub const UNPARSEABLE_VERDICT: &str = "unparseable_verdict";
    /// Verdict replaced by the generic rejection after a failed re-ask.
    pub const GENERIC_REJECTION: &str = "generic_rejection";
}
