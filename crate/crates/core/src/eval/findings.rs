use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{CheckerRegistry, EvalError};
use crate::pipeline::CodeDocument;

/// Error categories for an updated file, most to least severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorCategory {
    /// The file does not run at all (e.g. a syntax error).
    Fatal,
    /// Runs, but some functionality fails during execution.
    Runtime,
    /// Works, but behaves differently from the original.
    Content,
    /// Features lost, or added without being asked for.
    MissingAdditional,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 4] = [
        ErrorCategory::Fatal,
        ErrorCategory::Runtime,
        ErrorCategory::Content,
        ErrorCategory::MissingAdditional,
    ];
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            ErrorCategory::Fatal => "Fatal",
            ErrorCategory::Runtime => "Runtime",
            ErrorCategory::Content => "Content",
            ErrorCategory::MissingAdditional => "MissingAdditional",
        })
    }
}

impl FromStr for ErrorCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorCategory::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown error category `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingSource {
    HumanAnnotation,
    AutomatedCheck,
}

/// Lower-cased, whitespace-collapsed form used to tell mistakes apart.
pub fn normalize_cause_key(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    category: ErrorCategory,
    cause_key: String,
    description: String,
    source: FindingSource,
}

impl Finding {
    /// Returns `None` when the cause key normalizes to nothing.
    pub fn new(
        category: ErrorCategory,
        cause_key: &str,
        description: impl Into<String>,
        source: FindingSource,
    ) -> Option<Self> {
        let cause_key = normalize_cause_key(cause_key);
        (!cause_key.is_empty()).then(|| Self {
            category,
            cause_key,
            description: description.into(),
            source,
        })
    }

    pub fn category(&self) -> ErrorCategory {
        self.category
    }

    pub fn cause_key(&self) -> &str {
        &self.cause_key
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn source(&self) -> FindingSource {
        self.source
    }
}

/// Errors of one run. A mistake counts once however often it shows up; the
/// first category recorded for a cause key is kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunErrorLedger {
    run_id: String,
    findings: IndexMap<String, Finding>,
}

impl RunErrorLedger {
    pub fn new(run_id: impl Into<String>) -> Self {
        Self {
            run_id: run_id.into(),
            findings: IndexMap::new(),
        }
    }

    /// Returns whether the finding was new.
    pub fn record(&mut self, finding: Finding) -> bool {
        if self.findings.contains_key(finding.cause_key()) {
            return false;
        }
        self.findings.insert(finding.cause_key.clone(), finding);
        true
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn findings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.values()
    }

    pub fn count(&self, category: ErrorCategory) -> usize {
        self.findings().filter(|f| f.category == category).count()
    }
}

pub fn record_finding(mut ledger: RunErrorLedger, finding: Finding) -> RunErrorLedger {
    ledger.record(finding);
    ledger
}

/// Fatal findings from the syntax checker registered for the file's language.
/// Runtime, content and missing/additional findings only come from annotations.
pub fn check_fatal(code: &CodeDocument, checkers: &CheckerRegistry) -> Result<Vec<Finding>, EvalError> {
    let checker = checkers
        .get(code.language_tag())
        .ok_or_else(|| EvalError::CheckerUnavailable(code.language_tag().to_string()))?;
    Ok(checker
        .check(code.content())?
        .into_iter()
        .filter_map(|msg| Finding::new(ErrorCategory::Fatal, &msg, msg.clone(), FindingSource::AutomatedCheck))
        .collect())
}
