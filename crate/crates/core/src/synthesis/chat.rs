use std::sync::LazyLock;

use rand::seq::IndexedRandom;
use regex::Regex;
use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::http::{build_client, send_with_retry, Limiter};
use super::ClientConfig;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub n_samples: u32,
    pub temperature: f64,
    pub model_name: String,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Validation("n_samples must be at least 1".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::Validation(
                "temperature must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

const MOCK_WORDS: [&str; 32] = [
    "i", "you", "we", "really", "never", "always", "feel", "think", "this", "that", "game", "song",
    "today", "tonight", "again", "so", "very", "happy", "upset", "about", "it", "love", "hate",
    "believe", "can't", "wait", "see", "what", "happened", "here", "now", "together",
];

const MOCK_MAX_WORDS: usize = 8;

static WORD_LIMIT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"no more than (\d+) words").expect("valid regex"));

fn mock_word_count(user: &str) -> usize {
    WORD_LIMIT
        .captures(user)
        .and_then(|c| c[1].parse::<usize>().ok())
        .map_or(MOCK_MAX_WORDS, |n| n.min(MOCK_MAX_WORDS))
}

fn mock_stream_seed(mock_seed: u64, user: &str, index: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(mock_seed.to_le_bytes());
    h.update(user.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn mock_sentence(mock_seed: u64, user: &str, index: u32) -> String {
    let mut rng = seed::rng(mock_stream_seed(mock_seed, user, index));
    let n = mock_word_count(user);
    let words: Vec<&str> = (0..n)
        .map(|_| *MOCK_WORDS.choose(&mut rng).expect("non-empty word list"))
        .collect();
    let mut sentence = words.join(" ");
    if let Some(first) = sentence.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    sentence.push('.');
    sentence
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

/// Chat-completion client. Shareable across threads.
pub struct ChatClient {
    cfg: ClientConfig,
    live: Option<(Client, String)>,
    limiter: Limiter,
}

impl ChatClient {
    pub fn new(cfg: ClientConfig) -> Result<Self> {
        cfg.validate()?;
        let live = if cfg.mock_mode {
            None
        } else {
            let key = cfg.api_key()?;
            Some((build_client(&cfg)?, key))
        };
        Ok(Self {
            limiter: Limiter::new(cfg.max_concurrent),
            cfg,
            live,
        })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    pub fn sample(&self, req: &ChatRequest) -> Result<Vec<String>> {
        req.validate()?;
        match &self.live {
            None => Ok((0..req.n_samples)
                .map(|i| mock_sentence(self.cfg.mock_seed, &req.user, i))
                .collect()),
            Some((client, key)) => self.sample_live(client, key, req),
        }
    }

    fn sample_live(&self, client: &Client, key: &str, req: &ChatRequest) -> Result<Vec<String>> {
        let body = json!({
            "model": req.model_name,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.user},
            ],
            "n": req.n_samples,
            "temperature": req.temperature,
        });
        let resp = send_with_retry(&self.cfg, &self.limiter, || {
            client
                .post(&self.cfg.endpoint_url)
                .bearer_auth(key)
                .json(&body)
        })?;
        let parsed: ChatResponse = resp.json().map_err(|e| Error::Transport {
            status: None,
            message: format!("malformed chat response: {e}"),
        })?;
        Ok(parsed
            .choices
            .into_iter()
            .map(|c| c.message.content.unwrap_or_default())
            .collect())
    }
}

/// One-shot convenience wrapper around [`ChatClient::sample`].
pub fn chat_sample(req: &ChatRequest, cfg: &ClientConfig) -> Result<Vec<String>> {
    ChatClient::new(cfg.clone())?.sample(req)
}
