use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::WorkspaceError;
use crate::gateway::GenerationParams;
use crate::pipeline::FeedbackBudget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Live,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Vapu,
    Zsl,
    Osl,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Vapu => "vapu",
            Method::Zsl => "zsl",
            Method::Osl => "osl",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vapu" => Ok(Method::Vapu),
            "zsl" => Ok(Method::Zsl),
            "osl" => Ok(Method::Osl),
            _ => Err(format!("unknown method `{s}` (expected vapu, zsl or osl)")),
        }
    }
}

/// One batch of runs: a method and model over a set of files, repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: String,
    pub method: Method,
    pub params: GenerationParams,
    pub max_feedback_iterations: u32,
    pub repetitions: u32,
    pub backend: Backend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixtures_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// One-shot example file (TOML with `input` and `output`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<PathBuf>,
}

impl RunConfig {
    /// Ten repetitions, the feedback budget default, temperature 0.
    pub fn new(model: impl Into<String>, method: Method, backend: Backend, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            model: model.into(),
            method,
            params: GenerationParams::default(),
            max_feedback_iterations: FeedbackBudget::DEFAULT_MAX_ITERATIONS,
            repetitions: 10,
            backend,
            fixtures_dir: None,
            output_dir: output_dir.into(),
            example: None,
        }
    }

    pub fn temperature(&self) -> f64 {
        self.params.temperature
    }

    /// Checks the invariants. Returns warnings for settings that are allowed
    /// but unusual.
    pub fn validate(&self) -> Result<Vec<String>, WorkspaceError> {
        let invalid = |m: String| Err(WorkspaceError::ConfigInvalid(m));
        if self.model.trim().is_empty() {
            return invalid("model must be given".into());
        }
        self.params
            .validate()
            .map_err(|e| WorkspaceError::ConfigInvalid(e.to_string()))?;
        if self.max_feedback_iterations == 0 {
            return invalid("max feedback iterations must be at least 1".into());
        }
        if self.repetitions == 0 {
            return invalid("repetitions must be at least 1".into());
        }
        if self.backend == Backend::Replay && self.fixtures_dir.is_none() {
            return invalid("the replay backend needs a fixtures directory".into());
        }
        match (self.method, &self.example) {
            (Method::Osl, None) => return invalid("one-shot runs need an example file".into()),
            (Method::Zsl | Method::Vapu, Some(_)) => {
                return invalid(format!("an example file is only used by osl runs, not {}", self.method))
            }
            _ => {}
        }
        let mut warnings = Vec::new();
        let t = self.params.temperature;
        if t != 0.0 && t != 1.0 {
            warnings.push(format!("temperature {t} is neither 0 nor 1"));
        }
        Ok(warnings)
    }
}
