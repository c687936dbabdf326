//! Multi-agent updating of legacy source files, with the tooling to measure
//! how well the updates turned out.
//!
//! A run goes manager -> (prompt maker -> executor -> verifier <-> finalizer)
//! per task. Every model call goes through a [`GatewayHandle`], which can be
//! backed by a live endpoint or by recorded fixtures for offline replay.

pub mod cli;
pub mod eval;
pub mod gateway;
pub mod pipeline;
pub mod prompt;
pub mod workspace;

pub use gateway::{
    AgentRole, ChatBackend, ChatExchange, GatewayError, GatewayHandle, GenerationParams, ModelProfile, ModelRegistry,
    ReplayBackend, ReplayFixtureSet, SizeClass,
};
pub use pipeline::{
    run_update, Agents, ChangeRequest, CodeDocument, FeedbackBudget, RequirementSpec, Task, TaskPlan, UpdateResult,
    UpdateSettings, Verdict,
};
pub use prompt::{PromptTemplate, PromptText, TemplateSet};
