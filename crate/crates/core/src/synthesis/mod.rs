//! LLM and TTS clients, plus SSML rendering and job planning.
//!
//! Both clients have a live mode (HTTP, bounded concurrency, retry with
//! exponential backoff) and a mock mode whose output is a pure function of
//! `(mock_seed, inputs)`, so the whole pipeline can run offline.

mod chat;
mod http;
mod plan;
mod ssml;
mod tts;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chat::{chat_sample, ChatClient, ChatRequest};
pub use http::Limiter;
pub use plan::{plan_jobs, SynthesisJob};
pub use ssml::{build_ssml, escape_xml};
pub use tts::{silent_wav, tts_synthesize, SynthesisRecord, TtsClient, MOCK_WAV_BYTES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientConfig {
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default)]
    pub api_key_env_var: String,
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent: usize,
    #[serde(default = "default_retry_limit")]
    pub retry_limit: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_base_ms: u64,
    #[serde(default = "default_true")]
    pub mock_mode: bool,
    #[serde(default)]
    pub mock_seed: u64,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
}

fn default_max_concurrent() -> usize {
    4
}
fn default_retry_limit() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_true() -> bool {
    true
}
fn default_timeout_s() -> u64 {
    60
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            endpoint_url: String::new(),
            api_key_env_var: String::new(),
            max_concurrent: default_max_concurrent(),
            retry_limit: default_retry_limit(),
            backoff_base_ms: default_backoff_ms(),
            mock_mode: true,
            mock_seed: 0,
            timeout_s: default_timeout_s(),
        }
    }
}

impl ClientConfig {
    pub fn mock(seed: u64) -> Self {
        Self {
            mock_seed: seed,
            ..Self::default()
        }
    }

    pub fn backoff_base(&self) -> Duration {
        Duration::from_millis(self.backoff_base_ms)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_concurrent == 0 {
            return Err(Error::Config("`max_concurrent` must be at least 1".into()));
        }
        if self.backoff_base_ms == 0 {
            return Err(Error::Config("`backoff_base_ms` must be positive".into()));
        }
        if !self.mock_mode {
            if self.endpoint_url.is_empty() {
                return Err(Error::Config("live mode requires `endpoint_url`".into()));
            }
            if self.api_key_env_var.is_empty() {
                return Err(Error::Config("live mode requires `api_key_env_var`".into()));
            }
        }
        Ok(())
    }

    /// Reads the API key from the configured environment variable.
    pub fn api_key(&self) -> Result<String> {
        match std::env::var(&self.api_key_env_var) {
            Ok(key) if !key.is_empty() => Ok(key),
            _ => Err(Error::Config(format!(
                "API key environment variable `{}` is not set",
                self.api_key_env_var
            ))),
        }
    }
}
