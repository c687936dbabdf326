//! Provider-agnostic access to chat-completion models.
//!
//! A [`ChatBackend`] answers single prompts. A [`GatewayHandle`] wraps a
//! backend for the duration of one run: it checks the prompt against the
//! model's context window, retries transient failures, keeps the per-role
//! call counters used for replay keying and records every exchange.

mod live;
mod registry;
mod replay;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use live::LiveBackend;
pub use registry::{ModelProfile, ModelRegistry, RegistryError, SizeClass};
pub use replay::{load_replay_fixtures, FixtureError, ReplayBackend, ReplayFixtureSet};

/// The agent (or baseline prompt) a model call is made on behalf of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Manager,
    PromptMaker,
    Executor,
    Verifier,
    Finalizer,
    Baseline,
}

impl AgentRole {
    pub const ALL: [AgentRole; 6] = [
        AgentRole::Manager,
        AgentRole::PromptMaker,
        AgentRole::Executor,
        AgentRole::Verifier,
        AgentRole::Finalizer,
        AgentRole::Baseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentRole::Manager => "manager",
            AgentRole::PromptMaker => "prompt_maker",
            AgentRole::Executor => "executor",
            AgentRole::Verifier => "verifier",
            AgentRole::Finalizer => "finalizer",
            AgentRole::Baseline => "baseline",
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentRole::ALL
            .into_iter()
            .find(|role| role.as_str() == s)
            .ok_or_else(|| format!("unknown agent role `{s}`"))
    }
}

/// Per-call sampling and transport limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub request_timeout_secs: f64,
    pub max_retries: u32,
}

impl GenerationParams {
    pub fn new(temperature: f64) -> Result<Self, GatewayError> {
        let params = Self {
            temperature,
            ..Self::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(GatewayError::InvalidParams(format!(
                "temperature {} outside [0, 1]",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(GatewayError::InvalidParams(
                "max_output_tokens must be positive".into(),
            ));
        }
        if self.request_timeout_secs.is_nan() || self.request_timeout_secs <= 0.0 {
            return Err(GatewayError::InvalidParams(
                "request timeout must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn request_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.request_timeout_secs)
    }
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_output_tokens: 4096,
            request_timeout_secs: 120.0,
            max_retries: 3,
        }
    }
}

/// One recorded model call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    /// Position of the exchange within its run, starting at 0.
    pub seq: u64,
    pub role: AgentRole,
    /// Per-role call index, the replay key together with `role`.
    pub role_index: usize,
    pub prompt: String,
    pub response: Option<String>,
    pub error: Option<String>,
    pub duration_secs: f64,
    pub started_at: DateTime<Utc>,
    pub model: String,
    pub temperature: f64,
    pub retries: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl ChatExchange {
    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

/// What a backend sees for one attempt.
#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub role: AgentRole,
    pub role_index: usize,
    pub prompt: &'a str,
    pub model: &'a ModelProfile,
    pub params: &'a GenerationParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    /// Worth retrying: timeouts, rate limits, server errors.
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("request refused: {0}")]
    Refused(String),
}

/// A chat-completion endpoint. Implementations must tolerate concurrent calls.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, BackendError>;

    /// Live backends talk to a remote model; replay and scripted ones do not.
    fn is_live(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error(
        "prompt of ~{estimated_tokens} tokens plus {max_output_tokens} output tokens exceeds the \
         {context_length}-token context of {model}"
    )]
    ContextOverflow {
        model: String,
        estimated_tokens: u64,
        max_output_tokens: u32,
        context_length: u32,
    },
    #[error("gave up after {attempts} attempts: {last_error}")]
    TransientExhausted { attempts: u32, last_error: String },
    #[error("backend refused the request: {0}")]
    BackendRefused(String),
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
}

/// Exponential backoff between attempts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl RetryPolicy {
    pub const fn immediate() -> Self {
        Self {
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

/// Rough token estimate used for the context pre-check (4 characters per token).
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

#[derive(Debug, Default)]
struct SessionState {
    cursors: HashMap<AgentRole, usize>,
    exchanges: Vec<ChatExchange>,
}

/// A backend bound to one model for one run.
///
/// The handle owns the run's replay cursors and exchange log, so independent
/// runs must each use their own handle; the backend behind it may be shared.
pub struct GatewayHandle {
    backend: Arc<dyn ChatBackend>,
    profile: ModelProfile,
    retry: RetryPolicy,
    state: Mutex<SessionState>,
}

impl fmt::Debug for GatewayHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GatewayHandle")
            .field("profile", &self.profile.profile_id)
            .field("live", &self.backend.is_live())
            .finish_non_exhaustive()
    }
}

impl GatewayHandle {
    pub fn new(backend: Arc<dyn ChatBackend>, profile: ModelProfile) -> Self {
        Self {
            backend,
            profile,
            retry: RetryPolicy::default(),
            state: Mutex::new(SessionState::default()),
        }
    }

    pub fn with_retry_policy(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn profile(&self) -> &ModelProfile {
        &self.profile
    }

    pub fn is_live(&self) -> bool {
        self.backend.is_live()
    }

    /// Sends `prompt` on behalf of `role` and records the exchange.
    pub fn complete(
        &self,
        role: AgentRole,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<ChatExchange, GatewayError> {
        params.validate()?;
        let role_index = {
            let mut state = self.lock();
            let cursor = state.cursors.entry(role).or_insert(0);
            let index = *cursor;
            *cursor += 1;
            index
        };
        let started_at = Utc::now();
        let clock = Instant::now();
        let mut retries = 0;
        let outcome = self.attempt_all(role, role_index, prompt, params, &mut retries);
        let duration_secs = clock.elapsed().as_secs_f64();

        let (response, error) = match &outcome {
            Ok(text) => (Some(text.clone()), None),
            Err(err) => (None, Some(err.to_string())),
        };
        let mut state = self.lock();
        let seq = state.exchanges.len() as u64;
        // Keep timestamps strictly increasing even on coarse clocks.
        let started_at = match state.exchanges.last() {
            Some(prev) if started_at <= prev.started_at => {
                prev.started_at + chrono::Duration::nanoseconds(1)
            }
            _ => started_at,
        };
        let exchange = ChatExchange {
            seq,
            role,
            role_index,
            prompt: prompt.to_string(),
            response,
            error,
            duration_secs,
            started_at,
            model: self.profile.profile_id.clone(),
            temperature: params.temperature,
            retries,
            flags: Vec::new(),
        };
        state.exchanges.push(exchange.clone());
        drop(state);
        outcome.map(|_| exchange)
    }

    fn attempt_all(
        &self,
        role: AgentRole,
        role_index: usize,
        prompt: &str,
        params: &GenerationParams,
        retries: &mut u32,
    ) -> Result<String, GatewayError> {
        if prompt.trim().is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        let estimated_tokens = estimate_tokens(prompt);
        if estimated_tokens + u64::from(params.max_output_tokens)
            > u64::from(self.profile.context_length)
        {
            return Err(GatewayError::ContextOverflow {
                model: self.profile.profile_id.clone(),
                estimated_tokens,
                max_output_tokens: params.max_output_tokens,
                context_length: self.profile.context_length,
            });
        }
        let request = ChatRequest {
            role,
            role_index,
            prompt,
            model: &self.profile,
            params,
        };
        loop {
            match self.backend.complete(&request) {
                Ok(text) => return Ok(text),
                Err(BackendError::Refused(msg)) => return Err(GatewayError::BackendRefused(msg)),
                Err(BackendError::Transient(msg)) => {
                    if *retries >= params.max_retries {
                        return Err(GatewayError::TransientExhausted {
                            attempts: *retries + 1,
                            last_error: msg,
                        });
                    }
                    *retries += 1;
                    log::warn!("{role} call {role_index} failed ({msg}); retry {retries}");
                    let delay = self.retry.delay(*retries);
                    if !delay.is_zero() {
                        std::thread::sleep(delay);
                    }
                }
            }
        }
    }

    /// Attaches a flag (e.g. `no_fence`, `truncated`) to the latest exchange.
    pub fn flag_last(&self, flag: &str) {
        if let Some(last) = self.lock().exchanges.last_mut() {
            if !last.has_flag(flag) {
                last.flags.push(flag.to_string());
            }
        }
    }

    pub fn exchanges(&self) -> Vec<ChatExchange> {
        self.lock().exchanges.clone()
    }

    pub fn into_exchanges(self) -> Vec<ChatExchange> {
        self.state
            .into_inner()
            .unwrap_or_else(|poisoned| poisoned.into_inner())
            .exchanges
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, SessionState> {
        self.state
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
    }

    impl ChatBackend for Flaky {
        fn complete(&self, _request: &ChatRequest<'_>) -> Result<String, BackendError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(BackendError::Transient(format!("attempt {n} timed out")))
            } else {
                Ok("done".into())
            }
        }
    }

    struct Echo;

    impl ChatBackend for Echo {
        fn complete(&self, request: &ChatRequest<'_>) -> Result<String, BackendError> {
            Ok(format!("{}#{}", request.role, request.role_index))
        }
    }

    fn profile() -> ModelProfile {
        ModelRegistry::default_registry()
            .resolve("gpt-4o")
            .unwrap()
            .clone()
    }

    fn handle(backend: impl ChatBackend + 'static) -> GatewayHandle {
        GatewayHandle::new(Arc::new(backend), profile()).with_retry_policy(RetryPolicy::immediate())
    }

    #[test]
    fn flaky_backend_succeeds_after_two_retries() {
        let gw = handle(Flaky {
            failures: 2,
            calls: AtomicU32::new(0),
        });
        let params = GenerationParams {
            max_retries: 3,
            ..Default::default()
        };
        let ex = gw.complete(AgentRole::Executor, "go", &params).unwrap();
        assert_eq!(ex.response.as_deref(), Some("done"));
        assert_eq!(ex.retries, 2);
    }

    #[test]
    fn retries_are_bounded() {
        let backend = Arc::new(Flaky {
            failures: 10,
            calls: AtomicU32::new(0),
        });
        let gw = GatewayHandle::new(backend.clone(), profile())
            .with_retry_policy(RetryPolicy::immediate());
        let params = GenerationParams {
            max_retries: 2,
            ..Default::default()
        };
        let err = gw.complete(AgentRole::Executor, "go", &params).unwrap_err();
        assert!(matches!(err, GatewayError::TransientExhausted { attempts: 3, .. }));
        assert_eq!(backend.calls.load(Ordering::SeqCst), 3);
        let log = gw.exchanges();
        assert_eq!(log.len(), 1);
        assert!(log[0].response.is_none());
        assert_eq!(log[0].retries, 2);
    }

    #[test]
    fn per_role_cursors_are_independent() {
        let gw = handle(Echo);
        let p = GenerationParams::default();
        let a = gw.complete(AgentRole::Executor, "x", &p).unwrap();
        let b = gw.complete(AgentRole::Verifier, "x", &p).unwrap();
        let c = gw.complete(AgentRole::Executor, "x", &p).unwrap();
        assert_eq!(a.response.as_deref(), Some("executor#0"));
        assert_eq!(b.response.as_deref(), Some("verifier#0"));
        assert_eq!(c.response.as_deref(), Some("executor#1"));
        let log = gw.exchanges();
        assert_eq!(log.iter().map(|e| e.seq).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(log.windows(2).all(|w| w[0].started_at < w[1].started_at));
    }

    #[test]
    fn temperature_is_recorded() {
        let gw = handle(Echo);
        let p = GenerationParams::new(1.0).unwrap();
        let ex = gw.complete(AgentRole::Manager, "plan", &p).unwrap();
        assert_eq!(ex.temperature, 1.0);
    }

    #[test]
    fn context_overflow_is_checked_before_sending() {
        let mut small = profile();
        small.context_length = 100;
        let gw = GatewayHandle::new(Arc::new(Echo), small);
        let p = GenerationParams {
            max_output_tokens: 90,
            ..Default::default()
        };
        let err = gw
            .complete(AgentRole::Executor, &"x".repeat(80), &p)
            .unwrap_err();
        assert!(matches!(err, GatewayError::ContextOverflow { estimated_tokens: 20, .. }));
    }

    #[test]
    fn empty_prompt_is_rejected() {
        let gw = handle(Echo);
        let err = gw
            .complete(AgentRole::Executor, "  \n", &GenerationParams::default())
            .unwrap_err();
        assert_eq!(err, GatewayError::EmptyPrompt);
    }

    #[test]
    fn temperature_outside_unit_interval_is_invalid() {
        assert!(GenerationParams::new(1.5).is_err());
        assert!(GenerationParams::new(-0.1).is_err());
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let policy = RetryPolicy {
            base_delay: Duration::from_millis(100),
            max_delay: Duration::from_millis(350),
        };
        assert_eq!(policy.delay(1), Duration::from_millis(100));
        assert_eq!(policy.delay(2), Duration::from_millis(200));
        assert_eq!(policy.delay(3), Duration::from_millis(350));
        assert_eq!(policy.delay(40), Duration::from_millis(350));
    }

    #[test]
    fn role_names_round_trip() {
        for role in AgentRole::ALL {
            assert_eq!(role.as_str().parse::<AgentRole>().unwrap(), role);
        }
        assert!("developer".parse::<AgentRole>().is_err());
    }
}
