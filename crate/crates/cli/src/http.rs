//! HTTP planner backend with retry and exponential backoff.
//!
//! The endpoint and API key come from the environment (`TOOLPLAN_ENDPOINT`,
//! `TOOLPLAN_API_KEY`); they are never written into configs or reports. The
//! request body carries `{prompt, temperature, max_tokens}` and the response
//! may answer with `completion`, `text`, or an OpenAI-style `choices` array.

use std::thread::sleep;
use std::time::Duration;

use anyhow::{bail, Result};
use serde_json::json;

use toolplan_core::llmclient::{Planner, PlannerConfig, PlannerError};
use toolplan_core::promptkit::Prompt;

pub const ENDPOINT_VAR: &str = "TOOLPLAN_ENDPOINT";
pub const API_KEY_VAR: &str = "TOOLPLAN_API_KEY";

const BASE_BACKOFF_MS: u64 = 500;
const MAX_BACKOFF_MS: u64 = 30_000;

pub struct HttpPlanner {
    endpoint: String,
    api_key: Option<String>,
    config: PlannerConfig,
    agent: ureq::Agent,
}

impl HttpPlanner {
    pub fn from_env(config: PlannerConfig) -> Result<Self> {
        let endpoint = match std::env::var(ENDPOINT_VAR) {
            Ok(value) if !value.trim().is_empty() => value,
            _ => bail!("llmclient: set {ENDPOINT_VAR} to use the http backend"),
        };
        let api_key = std::env::var(API_KEY_VAR)
            .ok()
            .filter(|k| !k.trim().is_empty());
        let agent = ureq::AgentBuilder::new()
            .timeout(config.request_timeout)
            .build();
        Ok(Self {
            endpoint,
            api_key,
            config,
            agent,
        })
    }

    fn send(&self, prompt_text: &str) -> Result<String, RequestFailure> {
        let mut request = self
            .agent
            .post(&self.endpoint)
            .set("content-type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.set("authorization", &format!("Bearer {key}"));
        }
        let body = json!({
            "prompt": prompt_text,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        });
        match request.send_string(&body.to_string()) {
            Ok(response) => {
                let text = response
                    .into_string()
                    .map_err(|e| RequestFailure::fatal(format!("reading response body: {e}")))?;
                extract_completion(&text).map_err(RequestFailure::fatal)
            }
            Err(ureq::Error::Status(code, response)) => {
                let body = response.into_string().unwrap_or_default();
                let message = format!(
                    "http {code}: {}",
                    body.chars().take(200).collect::<String>()
                );
                if code == 429 || code >= 500 {
                    Err(RequestFailure::retryable(message))
                } else {
                    Err(RequestFailure::fatal(message))
                }
            }
            Err(ureq::Error::Transport(transport)) => {
                let message = transport.to_string();
                if message.contains("timed out") || message.contains("timeout") {
                    Err(RequestFailure::timeout(message))
                } else {
                    Err(RequestFailure::retryable(message))
                }
            }
        }
    }
}

struct RequestFailure {
    message: String,
    retryable: bool,
    timed_out: bool,
}

impl RequestFailure {
    fn retryable(message: String) -> Self {
        Self {
            message,
            retryable: true,
            timed_out: false,
        }
    }

    fn fatal(message: String) -> Self {
        Self {
            message,
            retryable: false,
            timed_out: false,
        }
    }

    fn timeout(message: String) -> Self {
        Self {
            message,
            retryable: true,
            timed_out: true,
        }
    }

    fn into_planner_error(self) -> PlannerError {
        if self.timed_out {
            PlannerError::Timeout(self.message)
        } else {
            PlannerError::BackendUnavailable(self.message)
        }
    }
}

fn extract_completion(body: &str) -> Result<String, String> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| format!("response is not JSON: {e}"))?;
    if let Some(text) = value.get("completion").and_then(|v| v.as_str()) {
        return Ok(text.to_string());
    }
    if let Some(text) = value.get("text").and_then(|v| v.as_str()) {
        return Ok(text.to_string());
    }
    if let Some(choice) = value.get("choices").and_then(|v| v.get(0)) {
        if let Some(text) = choice.pointer("/message/content").and_then(|v| v.as_str()) {
            return Ok(text.to_string());
        }
        if let Some(text) = choice.get("text").and_then(|v| v.as_str()) {
            return Ok(text.to_string());
        }
    }
    Err("response JSON has no completion/text/choices field".to_string())
}

fn backoff_delay(attempt: u32) -> Duration {
    let exponent = attempt.min(16);
    let ms = BASE_BACKOFF_MS
        .saturating_mul(1u64 << exponent)
        .min(MAX_BACKOFF_MS);
    Duration::from_millis(ms)
}

impl Planner for HttpPlanner {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&self, prompt: &Prompt) -> Result<String, PlannerError> {
        if let Some(limit) = self.config.max_prompt_chars {
            let prompt_chars = prompt.rendered.chars().count();
            if prompt_chars > limit {
                return Err(PlannerError::BudgetExceeded {
                    prompt_chars,
                    limit,
                });
            }
        }
        let mut attempt = 0u32;
        loop {
            match self.send(&prompt.rendered) {
                Ok(completion) => return Ok(completion),
                Err(failure) if failure.retryable && attempt < self.config.max_retries => {
                    sleep(backoff_delay(attempt));
                    attempt += 1;
                }
                Err(failure) => return Err(failure.into_planner_error()),
            }
        }
    }
}
