//! Chat-completions HTTP backend.
//!
//! Wire format, keys bit-exact:
//! request  `POST {endpoint}/v1/chat/completions`
//!          `{"model": "...", "messages": [{"role": "...", "content": "..."}], "max_tokens": N}`
//! response read from `choices[0].message.content`.
//!
//! `VST_BACKEND_URL` overrides the configured endpoint. Transient transport
//! failures and 5xx statuses are retried a configurable number of times.

use super::{
    estimate_tokens, finish_result, Backend, BackendError, ChatMessage, GenerationRequest,
    GenerationResult, BACKEND_URL_ENV,
};
use crate::time::{DurationMs, TimeMs};
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

#[derive(Serialize)]
struct ChatCompletionsBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatCompletionsResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    content: String,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    completion_tokens: Option<u32>,
}

/// Client for an OpenAI-compatible chat-completions endpoint. Cloneable and
/// safe to share across sessions; each call is independent.
#[derive(Debug, Clone)]
pub struct HttpChatBackend {
    endpoint: String,
    model: String,
    bearer_token: Option<String>,
    max_retries: u32,
    agent: ureq::Agent,
}

impl HttpChatBackend {
    /// `endpoint` is the base URL (no trailing `/v1/...` path). The
    /// `VST_BACKEND_URL` env var, when set, wins over the argument.
    pub fn new(endpoint: &str, model: &str) -> Self {
        let resolved = std::env::var(BACKEND_URL_ENV).unwrap_or_else(|_| endpoint.to_string());
        HttpChatBackend {
            endpoint: resolved.trim_end_matches('/').to_string(),
            model: model.to_string(),
            bearer_token: None,
            max_retries: 2,
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(60))
                .build(),
        }
    }

    pub fn with_bearer_token(mut self, token: &str) -> Self {
        self.bearer_token = Some(token.to_string());
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.agent = ureq::AgentBuilder::new().timeout(timeout).build();
        self
    }

    pub fn with_retries(mut self, max_retries: u32) -> Self {
        self.max_retries = max_retries;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn url(&self) -> String {
        format!("{}/v1/chat/completions", self.endpoint)
    }

    fn post_once(&self, body: &str) -> Result<String, BackendError> {
        let mut request = self
            .agent
            .post(&self.url())
            .set("Content-Type", "application/json");
        if let Some(token) = &self.bearer_token {
            request = request.set("Authorization", &format!("Bearer {token}"));
        }
        match request.send_string(body) {
            Ok(response) => response
                .into_string()
                .map_err(|e| BackendError::Transport(e.to_string())),
            Err(ureq::Error::Status(status, response)) => {
                let detail = response
                    .into_string()
                    .unwrap_or_else(|_| "<unreadable body>".to_string());
                Err(BackendError::HttpStatus {
                    status,
                    detail: detail.chars().take(512).collect(),
                })
            }
            Err(ureq::Error::Transport(t)) => Err(BackendError::Transport(t.to_string())),
        }
    }

    fn post_with_retries(&self, body: &str) -> Result<String, BackendError> {
        let mut attempt = 0;
        loop {
            match self.post_once(body) {
                Ok(text) => return Ok(text),
                Err(err) => {
                    let retryable = matches!(
                        &err,
                        BackendError::Transport(_) | BackendError::HttpStatus { status: 500..=599, .. }
                    );
                    if !retryable || attempt >= self.max_retries {
                        return Err(err);
                    }
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(100 * u64::from(attempt)));
                }
            }
        }
    }
}

impl Backend for HttpChatBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn generate(
        &mut self,
        request: &GenerationRequest,
        issued_at: TimeMs,
    ) -> Result<GenerationResult, BackendError> {
        if request.role_messages.is_empty() {
            return Err(BackendError::InvalidRequest(
                "request carries no messages".into(),
            ));
        }
        let body = serde_json::to_string(&ChatCompletionsBody {
            model: &self.model,
            messages: &request.role_messages,
            max_tokens: request.max_new_tokens,
        })
        .expect("body serializes");

        let started = Instant::now();
        let raw = self.post_with_retries(&body)?;
        let elapsed = DurationMs(started.elapsed().as_millis() as u64);

        let parsed: ChatCompletionsResponse = serde_json::from_str(&raw)
            .map_err(|e| BackendError::MalformedResponse(format!("{e}: {raw:.256}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| BackendError::MalformedResponse("response has no choices".into()))?;
        let text = choice.message.content;
        let token_count = parsed
            .usage
            .and_then(|u| u.completion_tokens)
            .unwrap_or_else(|| estimate_tokens(&text));
        Ok(finish_result(request, issued_at, text, token_count, elapsed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_keys_are_exact() {
        let body = ChatCompletionsBody {
            model: "vst-7b",
            messages: &[ChatMessage {
                role: crate::backends::Role::User,
                content: "hi".into(),
            }],
            max_tokens: 64,
        };
        let json = serde_json::to_string(&body).unwrap();
        assert_eq!(
            json,
            r#"{"model":"vst-7b","messages":[{"role":"user","content":"hi"}],"max_tokens":64}"#
        );
    }

    #[test]
    fn endpoint_trailing_slash_is_trimmed() {
        let backend = HttpChatBackend::new("http://localhost:9999/", "m");
        assert_eq!(backend.url(), "http://localhost:9999/v1/chat/completions");
    }
}
