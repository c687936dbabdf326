//! Files on disk: codebases, run configuration, transcripts, annotations and
//! scored records, plus the batch runner the CLI drives.

mod annotations;
mod codebase;
mod config;
mod records;
mod runner;
mod transcript;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::eval::EvalError;
use crate::gateway::{FixtureError, GatewayError, RegistryError};
use crate::pipeline::{DomainError, PipelineError};
use crate::prompt::PromptError;

pub use annotations::{load_annotations, Annotation, Annotations};
pub use codebase::{file_key, load_codebase};
pub use config::{Backend, Method, RunConfig};
pub use records::{load_features, read_records, write_records, ErrorCounts, ScoredRecord};
pub use runner::{
    evaluate, make_gateway, replay_transcript, run_batch, BatchInputs, ReplayReport, RunSummary,
};
pub use transcript::{
    load_transcript, persist_transcript, run_id, transcript_path, RunOutcome, RunTranscript, TranscriptHeader,
};

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("no files under {} match {patterns:?}", root.display())]
    NoFilesMatched { root: PathBuf, patterns: Vec<String> },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("storage full while writing {}", .0.display())]
    StorageFull(PathBuf),
    #[error("corrupt transcript {}: {reason}", path.display())]
    CorruptTranscript { path: PathBuf, reason: String },
    #[error("run `{0}` already exists in the output directory (use --force to overwrite)")]
    RunIdExists(String),
    #[error("{}:{line}: {reason}", path.display())]
    BadInputFile { path: PathBuf, line: usize, reason: String },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("run {run_id}: {source}")]
    Pipeline {
        run_id: String,
        #[source]
        source: PipelineError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("replay of {run_id} diverged: {detail}")]
    ReplayMismatch { run_id: String, detail: String },
}

impl WorkspaceError {
    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
        move |source| {
            if source.kind() == std::io::ErrorKind::StorageFull {
                WorkspaceError::StorageFull(path.to_path_buf())
            } else {
                WorkspaceError::Io {
                    path: path.to_path_buf(),
                    source,
                }
            }
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, WorkspaceError> {
    std::fs::read_to_string(path).map_err(WorkspaceError::io(path))
}
