use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_text, WorkspaceError};
use crate::eval::{CcGrade, CheckMarks, ErrorCategory, FileFeatures, Finding, MethodRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub fatal: u32,
    pub runtime: u32,
    pub content: u32,
    pub missing_additional: u32,
}

impl ErrorCounts {
    pub fn from_findings<'a>(findings: impl IntoIterator<Item = &'a Finding>) -> Self {
        let mut c = Self::default();
        for f in findings {
            match f.category() {
                ErrorCategory::Fatal => c.fatal += 1,
                ErrorCategory::Runtime => c.runtime += 1,
                ErrorCategory::Content => c.content += 1,
                ErrorCategory::MissingAdditional => c.missing_additional += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u32 {
        self.fatal + self.runtime + self.content + self.missing_additional
    }
}

/// One evaluated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub run_id: String,
    pub file_id: String,
    pub method: String,
    pub model: String,
    pub temperature: f64,
    pub repetition: u32,
    pub duration_secs: f64,
    /// LOC of the produced file; 0 for aborted runs.
    pub loc: usize,
    pub errors: ErrorCounts,
    pub findings: Vec<Finding>,
    /// Sum of requirement values, when requirements were annotated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requirements: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkmarks: Option<CheckMarks>,
    pub unverified: bool,
    pub truncated: bool,
    pub aborted: bool,
}

impl ScoredRecord {
    pub fn to_method_record(&self) -> Option<MethodRecord> {
        self.checkmarks.map(|marks| MethodRecord {
            file_id: self.file_id.clone(),
            model: self.model.clone(),
            method: self.method.clone(),
            marks,
        })
    }
}

pub fn write_records(records: &[ScoredRecord], path: &Path) -> Result<(), WorkspaceError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(WorkspaceError::io(parent))?;
    }
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(WorkspaceError::io(path))
}

pub fn read_records(path: &Path) -> Result<Vec<ScoredRecord>, WorkspaceError> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| WorkspaceError::BadInputFile {
                path: PathBuf::from(path),
                line: n + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct FeatureRow {
    file_id: String,
    loc: usize,
    cc: String,
    tasks: u32,
}

/// Reads a CSV with header `file_id,loc,cc,tasks`.
pub fn load_features(path: &Path) -> Result<BTreeMap<String, FileFeatures>, WorkspaceError> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (n, row) in reader.deserialize::<FeatureRow>().enumerate() {
        // Line numbers count the header.
        let bad = |reason: String| WorkspaceError::BadInputFile {
            path: PathBuf::from(path),
            line: n + 2,
            reason,
        };
        let row = row.map_err(|e| bad(e.to_string()))?;
        let cc: CcGrade = row.cc.parse().map_err(|e: crate::eval::EvalError| bad(e.to_string()))?;
        if out
            .insert(row.file_id.clone(), FileFeatures { loc: row.loc, cc, tasks: row.tasks })
            .is_some()
        {
            return Err(bad(format!("file `{}` listed twice", row.file_id)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::FindingSource;

    #[test]
    fn records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r/vapu.runs");
        let finding = Finding::new(ErrorCategory::Fatal, "x", "x", FindingSource::AutomatedCheck).unwrap();
        let rec = ScoredRecord {
            run_id: "a-vapu-m-t0-r1".into(),
            file_id: "a".into(),
            method: "vapu".into(),
            model: "m".into(),
            temperature: 0.0,
            repetition: 1,
            duration_secs: 1.0 / 3.0,
            loc: 12,
            errors: ErrorCounts::from_findings([&finding]),
            findings: vec![finding],
            requirements: Some(2),
            checkmarks: Some(CheckMarks::new(true, false, true)),
            unverified: false,
            truncated: false,
            aborted: false,
        };
        write_records(std::slice::from_ref(&rec), &path).unwrap();
        assert_eq!(read_records(&path).unwrap(), vec![rec.clone()]);
        assert_eq!(rec.errors.total(), 1);
        assert_eq!(rec.to_method_record().unwrap().marks, CheckMarks::new(true, false, true));
    }

    #[test]
    fn features_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, "file_id,loc,cc,tasks\na, 120 ,B,2\n").unwrap();
        let f = load_features(&path).unwrap();
        assert_eq!(f["a"], FileFeatures { loc: 120, cc: CcGrade::B, tasks: 2 });
        std::fs::write(&path, "file_id,loc,cc,tasks\na,1,Q,1\n").unwrap();
        assert!(matches!(load_features(&path), Err(WorkspaceError::BadInputFile { line: 2, .. })));
    }
}
