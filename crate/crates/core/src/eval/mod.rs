//! Measurement apparatus for update runs.

mod checker;
mod findings;
mod report;
mod scoring;
mod stats;
mod temperature;

use thiserror::Error;

pub use checker::{CheckerRegistry, DelimiterBalanceChecker, ExternalCommandChecker, SyntaxChecker};
pub use findings::{check_fatal, normalize_cause_key, record_finding, ErrorCategory, Finding, FindingSource, RunErrorLedger};
pub use report::{
    build_comparison_report, BucketRow, CheckMarkTotals, ComparisonReport, DeltaTable, FileFeatures, LocBands, ModelTotals,
    MethodRecord,
};
pub use scoring::{
    count_loc, score_checkmarks, score_difficulty, score_requirements, CcGrade, CheckMarks, DifficultyScore,
    RequirementResult, SELECTION_RANGE,
};
pub use stats::{aggregate_runs, normalize_durations, RunStats};
pub use temperature::{select_temperature, select_temperature_by, TemperatureScore};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no syntax checker registered for `{0}`")]
    CheckerUnavailable(String),
    #[error("syntax checker failed: {0}")]
    CheckerFailed(String),
    #[error("requirement value must be 0 or 1, got {0}")]
    NonBinaryRequirement(u8),
    #[error("nothing to score")]
    EmptyInput,
    #[error("invalid cyclomatic complexity grade `{0}`")]
    InvalidCcLetter(String),
    #[error("lines of code must be positive")]
    ZeroLoc,
    #[error("task count must be at least 1")]
    ZeroTasks,
    #[error("no temperature scores given")]
    EmptyScores,
    #[error("temperature {0} scored more than once")]
    DuplicateTemperature(f64),
    #[error("run sets do not score the same files: {0}")]
    MismatchedFiles(String),
    #[error("no features for file `{0}`")]
    MissingFeatures(String),
}
