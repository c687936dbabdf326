use serde_json::{json, Value};

use super::{BackendError, ChatBackend, ChatRequest};

/// Calls an OpenAI-compatible `chat/completions` endpoint.
///
/// The endpoint comes from the model profile and the bearer token from the
/// profile's `VAPU_API_KEY_<PROVIDER>` variable. Responses are never cached:
/// even at temperature 0 the served models are not deterministic.
#[derive(Debug)]
pub struct LiveBackend {
    agent: ureq::Agent,
    endpoint_override: Option<String>,
}

impl LiveBackend {
    pub fn new() -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint_override: None,
        }
    }

    /// Sends every request to `endpoint` regardless of the profile.
    pub fn with_endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint_override = Some(endpoint.into());
        self
    }

    fn api_key(request: &ChatRequest<'_>) -> Result<Option<String>, BackendError> {
        let var = request.model.api_key_variable();
        match std::env::var(&var) {
            Ok(key) if !key.is_empty() => Ok(Some(key)),
            _ if request.model.endpoint.is_none() => Err(BackendError::Refused(format!(
                "no endpoint configured for `{}` and {var} is unset",
                request.model.profile_id
            ))),
            _ => Ok(None),
        }
    }
}

impl Default for LiveBackend {
    fn default() -> Self {
        Self::new()
    }
}

fn classify_status(status: u16, body: &str) -> BackendError {
    let snippet: String = body.chars().take(300).collect();
    let msg = format!("HTTP {status}: {snippet}");
    if status == 408 || status == 429 || status >= 500 {
        BackendError::Transient(msg)
    } else {
        BackendError::Refused(msg)
    }
}

fn classify_transport(err: ureq::Error) -> BackendError {
    match err {
        ureq::Error::Timeout(_)
        | ureq::Error::Io(_)
        | ureq::Error::ConnectionFailed
        | ureq::Error::HostNotFound
        | ureq::Error::BodyStalled => BackendError::Transient(err.to_string()),
        other => BackendError::Refused(other.to_string()),
    }
}

fn message_content(body: &Value) -> Option<String> {
    let content = body.pointer("/choices/0/message/content")?;
    match content {
        Value::String(text) => Some(text.clone()),
        // Some providers return a list of content parts.
        Value::Array(parts) => Some(
            parts
                .iter()
                .filter_map(|part| part.get("text").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join(""),
        ),
        _ => None,
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, BackendError> {
        let endpoint = self
            .endpoint_override
            .as_deref()
            .or(request.model.endpoint.as_deref())
            .ok_or_else(|| {
                BackendError::Refused(format!(
                    "no endpoint configured for `{}`",
                    request.model.profile_id
                ))
            })?;
        let key = Self::api_key(request)?;
        let payload = json!({
            "model": request.model.api_model(),
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.params.temperature,
            "max_tokens": request.params.max_output_tokens,
        });
        let mut builder = self
            .agent
            .post(endpoint)
            .config()
            .timeout_global(Some(request.params.request_timeout()))
            .build()
            .header("Content-Type", "application/json");
        if let Some(key) = key {
            builder = builder.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = builder.send_json(&payload).map_err(classify_transport)?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(classify_transport)?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, &body));
        }
        let value: Value = serde_json::from_str(&body)
            .map_err(|e| BackendError::Refused(format!("malformed response body: {e}")))?;
        message_content(&value)
            .ok_or_else(|| BackendError::Refused("response has no message content".into()))
    }

    fn is_live(&self) -> bool {
        true
    }
}
