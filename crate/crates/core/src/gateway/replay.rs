use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use super::{AgentRole, BackendError, ChatBackend, ChatExchange, ChatRequest};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture file `{0}` is not named <role>-<index>.txt")]
    MalformedFixtureName(String),
    #[error("fixtures for role `{role}` skip index {missing}")]
    GapInIndices { role: AgentRole, missing: usize },
    #[error("duplicate fixture for ({role}, {index})")]
    Duplicate { role: AgentRole, index: usize },
    #[error("cannot read fixtures in {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Canned responses keyed by `(role, per-role call index)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayFixtureSet {
    entries: BTreeMap<(AgentRole, usize), String>,
}

impl ReplayFixtureSet {
    /// Builds a set from explicit entries, checking that every role's indices
    /// run contiguously from 0.
    pub fn from_entries(
        entries: impl IntoIterator<Item = ((AgentRole, usize), String)>,
    ) -> Result<Self, FixtureError> {
        let mut map = BTreeMap::new();
        for ((role, index), text) in entries {
            if map.insert((role, index), text).is_some() {
                return Err(FixtureError::Duplicate { role, index });
            }
        }
        let set = Self { entries: map };
        set.check_contiguous()?;
        Ok(set)
    }

    /// Convenience for tests and examples: responses listed per role in order.
    pub fn from_sequences<'a>(
        sequences: impl IntoIterator<Item = (AgentRole, Vec<&'a str>)>,
    ) -> Self {
        let mut entries = BTreeMap::new();
        for (role, texts) in sequences {
            for (index, text) in texts.into_iter().enumerate() {
                entries.insert((role, index), text.to_string());
            }
        }
        Self { entries }
    }

    /// Rebuilds the fixtures a recorded run consumed.
    pub fn from_exchanges(exchanges: &[ChatExchange]) -> Result<Self, FixtureError> {
        Self::from_entries(exchanges.iter().filter_map(|ex| {
            ex.response
                .clone()
                .map(|text| ((ex.role, ex.role_index), text))
        }))
    }

    fn check_contiguous(&self) -> Result<(), FixtureError> {
        for role in AgentRole::ALL {
            for (expected, index) in self.indices(role).enumerate() {
                if index != expected {
                    return Err(FixtureError::GapInIndices {
                        role,
                        missing: expected,
                    });
                }
            }
        }
        Ok(())
    }

    fn indices(&self, role: AgentRole) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .range((role, 0)..=(role, usize::MAX))
            .map(|((_, index), _)| *index)
    }

    pub fn get(&self, role: AgentRole, index: usize) -> Option<&str> {
        self.entries.get(&(role, index)).map(String::as_str)
    }

    pub fn count(&self, role: AgentRole) -> usize {
        self.indices(role).count()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the set as `<role>-<index>.txt` files.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for ((role, index), text) in &self.entries {
            std::fs::write(dir.join(format!("{role}-{index}.txt")), text)?;
        }
        Ok(())
    }
}

fn parse_fixture_name(name: &str) -> Option<(AgentRole, usize)> {
    let stem = name.strip_suffix(".txt")?;
    let (role, index) = stem.rsplit_once('-')?;
    if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((role.parse().ok()?, index.parse().ok()?))
}

/// Loads every `<role>-<index>.txt` file directly inside `dir`.
///
/// Subdirectories, hidden files and files without a `.txt` extension are
/// ignored; a `.txt` file with any other name is an error.
pub fn load_replay_fixtures(dir: &Path) -> Result<ReplayFixtureSet, FixtureError> {
    let io_err = |source| FixtureError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut entries = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        if !entry.file_type().map_err(io_err)?.is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') || !name.ends_with(".txt") {
            continue;
        }
        let key = parse_fixture_name(&name)
            .ok_or_else(|| FixtureError::MalformedFixtureName(name.clone()))?;
        let text = std::fs::read_to_string(entry.path()).map_err(|source| FixtureError::Io {
            path: entry.path(),
            source,
        })?;
        entries.push((key, text));
    }
    ReplayFixtureSet::from_entries(entries)
}

/// Answers every call from a fixture set. Lookups are pure, so one backend can
/// serve any number of concurrent runs; each run's handle owns its cursors.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    fixtures: Arc<ReplayFixtureSet>,
}

impl ReplayBackend {
    pub fn new(fixtures: ReplayFixtureSet) -> Self {
        Self {
            fixtures: Arc::new(fixtures),
        }
    }

    pub fn fixtures(&self) -> &ReplayFixtureSet {
        &self.fixtures
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, BackendError> {
        self.fixtures
            .get(request.role, request.role_index)
            .map(str::to_string)
            .ok_or_else(|| {
                BackendError::Refused(format!(
                    "fixture miss: no response for ({}, {})",
                    request.role, request.role_index
                ))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{GatewayError, GatewayHandle, GenerationParams, ModelRegistry};

    fn write(dir: &Path, name: &str, text: &str) {
        std::fs::write(dir.join(name), text).unwrap();
    }

    #[test]
    fn loads_contiguous_fixtures() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "executor-0.txt", "first");
        write(dir.path(), "executor-1.txt", "second");
        write(dir.path(), "notes.md", "ignored");
        std::fs::create_dir(dir.path().join("other")).unwrap();
        let set = load_replay_fixtures(dir.path()).unwrap();
        assert_eq!(set.count(AgentRole::Executor), 2);
        assert_eq!(set.get(AgentRole::Executor, 1), Some("second"));
    }

    #[test]
    fn gap_in_indices_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "executor-0.txt", "a");
        write(dir.path(), "executor-2.txt", "c");
        assert!(matches!(
            load_replay_fixtures(dir.path()),
            Err(FixtureError::GapInIndices {
                role: AgentRole::Executor,
                missing: 1
            })
        ));
    }

    #[test]
    fn empty_dir_is_an_empty_set() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_replay_fixtures(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn malformed_names_are_rejected() {
        for name in ["executor.txt", "developer-0.txt", "executor-x.txt", "executor--1.txt"] {
            let dir = tempfile::tempdir().unwrap();
            write(dir.path(), name, "a");
            assert!(
                matches!(
                    load_replay_fixtures(dir.path()),
                    Err(FixtureError::MalformedFixtureName(_))
                ),
                "{name}"
            );
        }
    }

    #[test]
    fn fixture_text_is_kept_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "prompt_maker-0.txt", "  spaced\n\n");
        let set = load_replay_fixtures(dir.path()).unwrap();
        assert_eq!(set.get(AgentRole::PromptMaker, 0), Some("  spaced\n\n"));
    }

    #[test]
    fn replay_hit_and_miss_through_the_gateway() {
        let set = ReplayFixtureSet::from_sequences([(AgentRole::Executor, vec!["echo"])]);
        let profile = ModelRegistry::default_registry()
            .resolve("gpt-4o")
            .unwrap()
            .clone();
        let gw = GatewayHandle::new(Arc::new(ReplayBackend::new(set)), profile);
        let params = GenerationParams::default();
        let hit = gw.complete(AgentRole::Executor, "p", &params).unwrap();
        assert_eq!(hit.response.as_deref(), Some("echo"));
        assert!(hit.duration_secs >= 0.0);
        let miss = gw.complete(AgentRole::Executor, "p", &params).unwrap_err();
        match miss {
            GatewayError::BackendRefused(msg) => assert!(msg.contains("(executor, 1)"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn replay_is_deterministic_per_key() {
        let set = ReplayFixtureSet::from_sequences([(AgentRole::Verifier, vec!["ACCEPT"])]);
        let backend = ReplayBackend::new(set);
        let profile = ModelRegistry::default_registry()
            .resolve("gpt-4o")
            .unwrap()
            .clone();
        let params = GenerationParams::default();
        let request = ChatRequest {
            role: AgentRole::Verifier,
            role_index: 0,
            prompt: "p",
            model: &profile,
            params: &params,
        };
        let first = backend.complete(&request).unwrap();
        for _ in 0..10 {
            assert_eq!(backend.complete(&request).unwrap(), first);
        }
    }
}
