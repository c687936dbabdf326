use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::count_loc;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("requirement `{0}` has no non-blank lines")]
    EmptyRequirements(String),
    #[error("task description is empty")]
    EmptyTask,
    #[error("task plan is empty")]
    EmptyPlan,
    #[error("change request is empty")]
    EmptyChange,
    #[error("a rejection needs at least one change request")]
    EmptyChangeList,
    #[error("feedback budget must allow at least one iteration")]
    ZeroBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequirementKind {
    RequirementList,
    ProjectDescription,
}

/// What the user wants done to the code: a list of requirements or a free
/// project description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementSpec {
    id: String,
    body: Vec<String>,
    kind: RequirementKind,
}

impl RequirementSpec {
    /// Blank lines are dropped; at least one line must remain.
    pub fn new<I, S>(id: impl Into<String>, lines: I, kind: RequirementKind) -> Result<Self, DomainError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let id = id.into();
        let body: Vec<String> = lines
            .into_iter()
            .map(|l| l.as_ref().trim_end().to_string())
            .filter(|l| !l.trim().is_empty())
            .collect();
        if body.is_empty() {
            return Err(DomainError::EmptyRequirements(id));
        }
        Ok(Self { id, body, kind })
    }

    pub fn from_text(id: impl Into<String>, text: &str, kind: RequirementKind) -> Result<Self, DomainError> {
        Self::new(id, text.lines(), kind)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn body(&self) -> &[String] {
        &self.body
    }

    pub fn kind(&self) -> RequirementKind {
        self.kind
    }

    pub fn text(&self) -> String {
        self.body.join("\n")
    }
}

/// One source file under update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeDocument {
    path: String,
    language_tag: String,
    content: String,
    loc: usize,
}

impl CodeDocument {
    pub fn new(path: impl Into<String>, language_tag: impl Into<String>, content: impl Into<String>) -> Self {
        let content = content.into();
        Self {
            path: path.into(),
            language_tag: language_tag.into(),
            loc: count_loc(&content),
            content,
        }
    }

    /// A document whose language tag is guessed from the file extension.
    pub fn from_path(path: impl Into<String>, content: impl Into<String>) -> Self {
        let path = path.into();
        let tag = language_for_path(Path::new(&path));
        Self::new(path, tag, content)
    }

    /// Same path and language, new content.
    pub fn with_content(&self, content: impl Into<String>) -> Self {
        Self::new(self.path.clone(), self.language_tag.clone(), content)
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn language_tag(&self) -> &str {
        &self.language_tag
    }

    pub fn content(&self) -> &str {
        &self.content
    }

    pub fn loc(&self) -> usize {
        self.loc
    }
}

pub fn language_for_path(path: &Path) -> &'static str {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "php" | "ctp" | "phtml" | "inc" => "php",
        "py" => "python",
        "js" | "mjs" | "cjs" => "javascript",
        "ts" => "typescript",
        "java" => "java",
        "rb" => "ruby",
        "c" | "h" => "c",
        "cpp" | "cc" | "hpp" => "cpp",
        "cs" => "csharp",
        "go" => "go",
        "rs" => "rust",
        "html" | "htm" => "html",
        "css" => "css",
        _ => "text",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    index: usize,
    description: String,
}

impl Task {
    /// Descriptions are single-line: surrounding whitespace is trimmed and
    /// internal line breaks become spaces.
    pub fn new(index: usize, description: &str) -> Result<Self, DomainError> {
        let description = description
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        if description.is_empty() {
            return Err(DomainError::EmptyTask);
        }
        Ok(Self { index, description })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}. {}", self.index, self.description)
    }
}

/// Ordered tasks from the manager. Indices always run 1..=n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPlan {
    tasks: Vec<Task>,
    reflected: bool,
}

impl TaskPlan {
    pub fn from_descriptions<I, S>(descriptions: I) -> Result<Self, DomainError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tasks = descriptions
            .into_iter()
            .enumerate()
            .map(|(i, d)| Task::new(i + 1, d.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        if tasks.is_empty() {
            return Err(DomainError::EmptyPlan);
        }
        Ok(Self {
            tasks,
            reflected: false,
        })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    pub(crate) fn mark_reflected(mut self) -> Self {
        self.reflected = true;
        self
    }

    /// Numbered-list form, one task per line.
    pub fn serialize(&self) -> String {
        self.tasks
            .iter()
            .map(Task::to_string)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRequest {
    description: String,
}

impl ChangeRequest {
    pub fn new(description: &str) -> Result<Self, DomainError> {
        let description = description.trim();
        if description.is_empty() {
            return Err(DomainError::EmptyChange);
        }
        Ok(Self {
            description: description.to_string(),
        })
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

/// Verifier decision. Accepted exactly when there is nothing left to change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    accepted: bool,
    changes: Vec<ChangeRequest>,
}

impl Verdict {
    pub fn accept() -> Self {
        Self {
            accepted: true,
            changes: Vec::new(),
        }
    }

    pub fn reject(changes: Vec<ChangeRequest>) -> Result<Self, DomainError> {
        if changes.is_empty() {
            return Err(DomainError::EmptyChangeList);
        }
        Ok(Self {
            accepted: false,
            changes,
        })
    }

    pub fn is_accepted(&self) -> bool {
        self.accepted
    }

    pub fn changes(&self) -> &[ChangeRequest] {
        &self.changes
    }
}

/// Verifier/finalizer iterations allowed for one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackBudget {
    max_iterations: u32,
    used: u32,
}

impl FeedbackBudget {
    pub const DEFAULT_MAX_ITERATIONS: u32 = 2;

    pub fn new(max_iterations: u32) -> Result<Self, DomainError> {
        if max_iterations == 0 {
            return Err(DomainError::ZeroBudget);
        }
        Ok(Self {
            max_iterations,
            used: 0,
        })
    }

    /// Takes one iteration if any is left.
    pub fn try_consume(&mut self) -> bool {
        if self.used < self.max_iterations {
            self.used += 1;
            true
        } else {
            false
        }
    }

    pub fn used(&self) -> u32 {
        self.used
    }

    pub fn max_iterations(&self) -> u32 {
        self.max_iterations
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.max_iterations
    }
}

impl Default for FeedbackBudget {
    fn default() -> Self {
        Self {
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            used: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub task_index: usize,
    pub accepted: bool,
    pub finalizer_iterations: u32,
}

/// Result of one pipeline run over one file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateResult {
    pub final_code: CodeDocument,
    pub per_task_outcomes: Vec<TaskOutcome>,
    /// Some task ran out of feedback iterations without being accepted.
    pub unverified: bool,
    /// Some executor or finalizer output was cut off (unbalanced fences).
    #[serde(default)]
    pub truncated: bool,
    pub transcript_ref: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requirements_drop_blank_lines() {
        let req = RequirementSpec::new("r", ["a", "  ", "b  "], RequirementKind::RequirementList).unwrap();
        assert_eq!(req.body(), ["a", "b"]);
        assert_eq!(
            RequirementSpec::from_text("r", " \n\n", RequirementKind::ProjectDescription),
            Err(DomainError::EmptyRequirements("r".into()))
        );
    }

    #[test]
    fn code_document_counts_loc_and_keeps_identity() {
        let doc = CodeDocument::from_path("views/a.ctp", "<?php\n\necho 1;\n");
        assert_eq!(doc.language_tag(), "php");
        assert_eq!(doc.loc(), 2);
        let next = doc.with_content("x");
        assert_eq!(next.path(), "views/a.ctp");
        assert_eq!(next.language_tag(), "php");
        assert_eq!(next.loc(), 1);
    }

    #[test]
    fn plan_indices_start_at_one() {
        let plan = TaskPlan::from_descriptions(["a", "b", "c"]).unwrap();
        let idx: Vec<_> = plan.tasks().iter().map(Task::index).collect();
        assert_eq!(idx, [1, 2, 3]);
        assert!(!plan.is_reflected());
        assert_eq!(plan.serialize(), "1. a\n2. b\n3. c");
        assert_eq!(TaskPlan::from_descriptions(Vec::<&str>::new()), Err(DomainError::EmptyPlan));
        assert_eq!(TaskPlan::from_descriptions(["a", " "]), Err(DomainError::EmptyTask));
    }

    #[test]
    fn verdict_invariant() {
        assert!(Verdict::accept().changes().is_empty());
        assert_eq!(Verdict::reject(vec![]), Err(DomainError::EmptyChangeList));
        let v = Verdict::reject(vec![ChangeRequest::new("x").unwrap()]).unwrap();
        assert!(!v.is_accepted());
    }

    #[test]
    fn budget_never_exceeds_max() {
        let mut b = FeedbackBudget::default();
        assert!(b.try_consume());
        assert!(b.try_consume());
        assert!(!b.try_consume());
        assert_eq!(b.used(), 2);
        assert!(b.is_exhausted());
        assert_eq!(FeedbackBudget::new(0), Err(DomainError::ZeroBudget));
    }
}
