use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatModel, LlmClientConfig, LlmError, ModelReply};

/// Single-turn chat-completions client.
///
/// 401/403 fail immediately; 408, 429, 5xx and transport errors are retried
/// with exponential backoff (`backoff_ms * 2^attempt`) up to `max_retries`
/// extra attempts; other statuses fail immediately.
pub struct RemoteModel {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    api_key_env: String,
    temperature: f64,
    max_tokens: u32,
    max_retries: u32,
    backoff: Duration,
}

enum Attempt {
    Done(Result<String, LlmError>),
    Retry(String),
}

impl RemoteModel {
    pub fn new(config: &LlmClientConfig) -> Result<Self, LlmError> {
        let endpoint = config
            .endpoint
            .as_deref()
            .filter(|e| !e.trim().is_empty())
            .ok_or_else(|| LlmError::Config("remote mode requires an endpoint".into()))?;
        if std::env::var(&config.api_key_env).map_or(true, |k| k.is_empty()) {
            return Err(LlmError::Config(format!(
                "remote mode requires an API key in ${}",
                config.api_key_env
            )));
        }
        if !(config.timeout_secs > 0.0) {
            return Err(LlmError::Config("timeout must be positive".into()));
        }
        let endpoint = endpoint.trim_end_matches('/');
        let url = if endpoint.ends_with("/chat/completions") {
            endpoint.to_string()
        } else {
            format!("{endpoint}/chat/completions")
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self {
            client,
            url,
            model: config.model.clone(),
            api_key_env: config.api_key_env.clone(),
            temperature: config.temperature,
            max_tokens: config.max_tokens,
            max_retries: config.max_retries,
            backoff: Duration::from_millis(config.backoff_ms),
        })
    }

    fn attempt(&self, prompt: &str) -> Attempt {
        let key = std::env::var(&self.api_key_env).unwrap_or_default();
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        });
        let response = match self.client.post(&self.url).bearer_auth(key).json(&body).send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("transport error: {}", e.without_url())),
        };
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Attempt::Done(Err(LlmError::Auth { status })),
            408 | 429 | 500..=599 => return Attempt::Retry(format!("HTTP {status}")),
            _ => {
                let body = response.text().unwrap_or_default();
                return Attempt::Done(Err(LlmError::Http {
                    status,
                    body: body.chars().take(500).collect(),
                }));
            }
        }
        let value: Value = match response.json() {
            Ok(v) => v,
            Err(e) => return Attempt::Done(Err(LlmError::Malformed(e.without_url().to_string()))),
        };
        match value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
        {
            Some(text) => Attempt::Done(Ok(text.to_string())),
            None => Attempt::Done(Err(LlmError::Malformed("no choices[0].message.content".into()))),
        }
    }
}

impl ChatModel for RemoteModel {
    fn mode(&self) -> &'static str {
        "remote"
    }

    fn complete(&self, prompt: &str) -> ModelReply {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(prompt) {
                Attempt::Done(result) => return ModelReply { result, attempts },
                Attempt::Retry(last) => {
                    if attempts > self.max_retries {
                        return ModelReply {
                            result: Err(LlmError::Exhausted { attempts, last }),
                            attempts,
                        };
                    }
                    log::warn!("llm attempt {attempts} failed ({last}); retrying");
                    std::thread::sleep(self.backoff * 2u32.saturating_pow(attempts - 1));
                }
            }
        }
    }
}
