use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{read_text, WorkspaceError};
use crate::eval::{CheckMarks, ErrorCategory, Finding, FindingSource, RequirementResult};

/// One line of an annotations file.
///
/// ```text
/// {"kind":"finding","run_id":"...","category":"Runtime","cause_key":"...","description":"..."}
/// {"kind":"requirement","run_id":"...","requirement_id":"R1","value":1}
/// {"kind":"checkmarks","file_id":"...","method":"vapu","model":"gpt-4o","updates_present_and_plausible":true,...}
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Annotation {
    Finding {
        run_id: String,
        category: String,
        cause_key: String,
        #[serde(default)]
        description: String,
    },
    Requirement {
        run_id: String,
        requirement_id: String,
        value: u8,
    },
    /// Keyed by `run_id`, or by `file_id` optionally narrowed by method and model.
    Checkmarks {
        #[serde(default)]
        run_id: Option<String>,
        #[serde(default)]
        file_id: Option<String>,
        #[serde(default)]
        method: Option<String>,
        #[serde(default)]
        model: Option<String>,
        updates_present_and_plausible: bool,
        basic_functions_ok: bool,
        all_requirements_correct: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct FileMarks {
    file_id: String,
    method: Option<String>,
    model: Option<String>,
    marks: CheckMarks,
}

/// Human and test annotations, indexed for scoring.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    findings: BTreeMap<String, Vec<Finding>>,
    requirements: BTreeMap<String, Vec<RequirementResult>>,
    run_marks: BTreeMap<String, CheckMarks>,
    file_marks: Vec<FileMarks>,
}

impl Annotations {
    pub fn findings(&self, run_id: &str) -> &[Finding] {
        self.findings.get(run_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn requirements(&self, run_id: &str) -> &[RequirementResult] {
        self.requirements.get(run_id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Marks given for the run itself win over marks given for its file.
    pub fn checkmarks(&self, run_id: &str, file_id: &str, method: &str, model: &str) -> Option<CheckMarks> {
        if let Some(m) = self.run_marks.get(run_id) {
            return Some(*m);
        }
        self.file_marks
            .iter()
            .rev()
            .find(|f| {
                f.file_id == file_id
                    && f.method.as_deref().is_none_or(|m| m == method)
                    && f.model.as_deref().is_none_or(|m| m == model)
            })
            .map(|f| f.marks)
    }

    /// Every run id any annotation refers to.
    pub fn run_ids(&self) -> impl Iterator<Item = &str> {
        self.findings
            .keys()
            .chain(self.requirements.keys())
            .chain(self.run_marks.keys())
            .map(String::as_str)
    }

    fn add(&mut self, a: Annotation) -> Result<(), String> {
        match a {
            Annotation::Finding {
                run_id,
                category,
                cause_key,
                description,
            } => {
                let category: ErrorCategory = category.parse()?;
                let finding = Finding::new(category, &cause_key, description, FindingSource::HumanAnnotation)
                    .ok_or("cause_key is blank")?;
                self.findings.entry(run_id).or_default().push(finding);
            }
            Annotation::Requirement {
                run_id,
                requirement_id,
                value,
            } => {
                let r = RequirementResult::new(requirement_id, value).map_err(|e| e.to_string())?;
                self.requirements.entry(run_id).or_default().push(r);
            }
            Annotation::Checkmarks {
                run_id,
                file_id,
                method,
                model,
                updates_present_and_plausible,
                basic_functions_ok,
                all_requirements_correct,
            } => {
                let marks = CheckMarks::new(updates_present_and_plausible, basic_functions_ok, all_requirements_correct);
                match (run_id, file_id) {
                    (Some(run_id), None) if method.is_none() && model.is_none() => {
                        self.run_marks.insert(run_id, marks);
                    }
                    (None, Some(file_id)) => self.file_marks.push(FileMarks {
                        file_id,
                        method,
                        model,
                        marks,
                    }),
                    _ => return Err("checkmarks need either run_id alone or file_id".into()),
                }
            }
        }
        Ok(())
    }
}

/// Reads a line-delimited annotations file. Blank lines and lines starting
/// with `#` are skipped.
pub fn load_annotations(path: &Path) -> Result<Annotations, WorkspaceError> {
    let text = read_text(path)?;
    let bad = |line: usize, reason: String| WorkspaceError::BadInputFile {
        path: PathBuf::from(path),
        line,
        reason,
    };
    let mut out = Annotations::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let a: Annotation = serde_json::from_str(line).map_err(|e| bad(n + 1, e.to_string()))?;
        out.add(a).map_err(|e| bad(n + 1, e))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        std::fs::write(
            &path,
            r#"# comment
{"kind":"finding","run_id":"r1","category":"runtime","cause_key":"URL  helper","description":"link broken"}
{"kind":"requirement","run_id":"r1","requirement_id":"R1","value":1}
{"kind":"checkmarks","file_id":"f","method":"zsl","updates_present_and_plausible":true,"basic_functions_ok":false,"all_requirements_correct":false}
{"kind":"checkmarks","run_id":"r1","updates_present_and_plausible":true,"basic_functions_ok":true,"all_requirements_correct":true}
"#,
        )
        .unwrap();
        let a = load_annotations(&path).unwrap();
        assert_eq!(a.findings("r1")[0].cause_key(), "url helper");
        assert_eq!(a.requirements("r1").len(), 1);
        assert_eq!(a.checkmarks("r1", "f", "vapu", "m"), Some(CheckMarks::new(true, true, true)));
        assert_eq!(a.checkmarks("r2", "f", "zsl", "m"), Some(CheckMarks::new(true, false, false)));
        assert_eq!(a.checkmarks("r3", "f", "vapu", "m"), None);
        assert!(a.findings("other").is_empty());
    }

    #[test]
    fn bad_lines_name_their_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        std::fs::write(&path, "\n{\"kind\":\"requirement\",\"run_id\":\"r\",\"requirement_id\":\"R\",\"value\":2}\n").unwrap();
        match load_annotations(&path) {
            Err(WorkspaceError::BadInputFile { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&path, "{\"kind\":\"finding\",\"run_id\":\"r\",\"category\":\"Odd\",\"cause_key\":\"k\"}").unwrap();
        assert!(load_annotations(&path).is_err());
    }
}
