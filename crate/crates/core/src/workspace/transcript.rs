use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{file_key, read_text, RunConfig, WorkspaceError};
use crate::gateway::{ChatExchange, ModelProfile};
use crate::pipeline::{CodeDocument, UpdateResult};
use crate::prompt::OneShotExample;

/// What the run being recorded was, and what it was given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub run_id: String,
    pub config: RunConfig,
    pub repetition: u32,
    pub profile: ModelProfile,
    pub requirements: String,
    pub original_code: CodeDocument,
    /// Template assets in effect, so a replay renders identical prompts.
    pub templates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<OneShotExample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunOutcome {
    Update(UpdateResult),
    Baseline { final_code: CodeDocument, truncated: bool },
    Aborted { task_index: Option<usize>, error: String },
}

impl RunOutcome {
    pub fn final_code(&self) -> Option<&CodeDocument> {
        match self {
            RunOutcome::Update(r) => Some(&r.final_code),
            RunOutcome::Baseline { final_code, .. } => Some(final_code),
            RunOutcome::Aborted { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTranscript {
    pub header: TranscriptHeader,
    pub exchanges: Vec<ChatExchange>,
    pub outcome: RunOutcome,
    pub duration_secs: f64,
}

impl RunTranscript {
    pub fn run_id(&self) -> &str {
        &self.header.run_id
    }
}

#[derive(Serialize, Deserialize)]
#[allow(clippy::large_enum_variant)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Header(TranscriptHeader),
    Exchange(ChatExchange),
    Outcome { outcome: RunOutcome, duration_secs: f64 },
    Checksum { sha256: String },
}

/// `<file-key>-<method>-<model>-t<temperature>-r<repetition>`
pub fn run_id(file_path: &str, config: &RunConfig, repetition: u32) -> String {
    format!(
        "{}-{}-{}-t{}-r{}",
        file_key(file_path),
        config.method,
        config.model,
        config.temperature(),
        repetition
    )
}

pub fn transcript_path(output_dir: &Path, run_id: &str) -> PathBuf {
    output_dir.join("transcripts").join(format!("{run_id}.jsonl"))
}

fn encode(t: &RunTranscript) -> String {
    let mut body = String::new();
    let mut push = |line: &Line| {
        body.push_str(&serde_json::to_string(line).expect("transcript records serialize"));
        body.push('\n');
    };
    push(&Line::Header(t.header.clone()));
    for ex in &t.exchanges {
        push(&Line::Exchange(ex.clone()));
    }
    push(&Line::Outcome {
        outcome: t.outcome.clone(),
        duration_secs: t.duration_secs,
    });
    let sha256 = hex::encode(Sha256::digest(body.as_bytes()));
    body.push_str(&serde_json::to_string(&Line::Checksum { sha256 }).expect("checksum serializes"));
    body.push('\n');
    body
}

/// Writes `<dir>/transcripts/<run_id>.jsonl`. An existing transcript for the
/// same run id is an error unless `overwrite` is set.
pub fn persist_transcript(t: &RunTranscript, dir: &Path, overwrite: bool) -> Result<PathBuf, WorkspaceError> {
    let path = transcript_path(dir, t.run_id());
    let parent = path.parent().expect("transcript path has a parent");
    std::fs::create_dir_all(parent).map_err(WorkspaceError::io(parent))?;
    if path.exists() && !overwrite {
        return Err(WorkspaceError::RunIdExists(t.run_id().to_string()));
    }
    let tmp = path.with_extension("jsonl.partial");
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(encode(t).as_bytes())?;
        f.sync_all()
    };
    if let Err(e) = write() {
        let _ = std::fs::remove_file(&tmp);
        return Err(WorkspaceError::io(&path)(e));
    }
    std::fs::rename(&tmp, &path).map_err(WorkspaceError::io(&path))?;
    Ok(path)
}

pub fn load_transcript(path: &Path) -> Result<RunTranscript, WorkspaceError> {
    let text = read_text(path)?;
    let corrupt = |reason: String| WorkspaceError::CorruptTranscript {
        path: path.to_path_buf(),
        reason,
    };
    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|i| i + 1)
        .ok_or_else(|| corrupt("missing checksum record".into()))?;
    let (body, last) = text.split_at(body_end);
    match serde_json::from_str::<Line>(last.trim_end()) {
        Ok(Line::Checksum { sha256 }) => {
            if hex::encode(Sha256::digest(body.as_bytes())) != sha256 {
                return Err(corrupt("checksum mismatch".into()));
            }
        }
        _ => return Err(corrupt("missing checksum record".into())),
    }

    let mut header = None;
    let mut exchanges = Vec::new();
    let mut outcome = None;
    for (n, line) in body.lines().enumerate() {
        let record: Line = serde_json::from_str(line).map_err(|e| corrupt(format!("line {}: {e}", n + 1)))?;
        match record {
            Line::Header(h) if n == 0 => header = Some(h),
            Line::Exchange(ex) if header.is_some() && outcome.is_none() => exchanges.push(ex),
            Line::Outcome { outcome: o, duration_secs } if header.is_some() && outcome.is_none() => {
                outcome = Some((o, duration_secs))
            }
            _ => return Err(corrupt(format!("line {}: record out of place", n + 1))),
        }
    }
    let header = header.ok_or_else(|| corrupt("missing header".into()))?;
    let (outcome, duration_secs) = outcome.ok_or_else(|| corrupt("missing outcome".into()))?;
    Ok(RunTranscript {
        header,
        exchanges,
        outcome,
        duration_secs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ModelRegistry;
    use crate::workspace::{Backend, Method};

    fn sample() -> RunTranscript {
        let config = RunConfig::new("gpt-4o", Method::Zsl, Backend::Live, "out");
        RunTranscript {
            header: TranscriptHeader {
                run_id: run_id("views/a.ctp", &config, 3),
                config,
                repetition: 3,
                profile: ModelRegistry::default_registry().resolve("gpt-4o").unwrap().clone(),
                requirements: "Update to CakePHP 5".into(),
                original_code: CodeDocument::from_path("views/a.ctp", "<?php echo 1; ?>"),
                templates: vec![],
                example: None,
            },
            exchanges: vec![],
            outcome: RunOutcome::Baseline {
                final_code: CodeDocument::from_path("views/a.ctp", "<?= 1 ?>"),
                truncated: false,
            },
            duration_secs: 0.25,
        }
    }

    #[test]
    fn run_id_scheme() {
        assert_eq!(sample().run_id(), "views_a-zsl-gpt-4o-t0-r3");
    }

    #[test]
    fn round_trip_and_collisions() {
        let dir = tempfile::tempdir().unwrap();
        let t = sample();
        let path = persist_transcript(&t, dir.path(), false).unwrap();
        assert_eq!(load_transcript(&path).unwrap(), t);
        assert!(matches!(persist_transcript(&t, dir.path(), false), Err(WorkspaceError::RunIdExists(_))));
        persist_transcript(&t, dir.path(), true).unwrap();
    }

    #[test]
    fn truncation_and_tampering_are_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = persist_transcript(&sample(), dir.path(), false).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() - 20]).unwrap();
        assert!(matches!(load_transcript(&path), Err(WorkspaceError::CorruptTranscript { .. })));
        std::fs::write(&path, text.replace("Update to", "Upgrade to")).unwrap();
        assert!(matches!(load_transcript(&path), Err(WorkspaceError::CorruptTranscript { .. })));
        std::fs::write(&path, "").unwrap();
        assert!(matches!(load_transcript(&path), Err(WorkspaceError::CorruptTranscript { .. })));
    }
}
