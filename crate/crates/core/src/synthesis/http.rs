use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder, Response};

use super::ClientConfig;
use crate::error::{Error, Result};

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
pub struct Limiter {
    max: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Limiter {
    pub fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().expect("limiter poisoned");
        while *n >= self.max {
            n = self.freed.wait(n).expect("limiter poisoned");
        }
        *n += 1;
        Permit { limiter: self }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.limiter.in_flight.lock().expect("limiter poisoned");
        *n -= 1;
        self.limiter.freed.notify_one();
    }
}

pub(crate) fn build_client(cfg: &ClientConfig) -> Result<Client> {
    Client::builder()
        .timeout(Duration::from_secs(cfg.timeout_s))
        .build()
        .map_err(|e| Error::Config(format!("cannot build HTTP client: {e}")))
}

fn retryable(status: u16) -> bool {
    matches!(status, 408 | 429 | 500 | 502 | 503 | 504)
}

/// Sends the request produced by `make`, retrying transient failures up to
/// `cfg.retry_limit` times with delays `backoff_base * 2^attempt`.
pub(crate) fn send_with_retry(
    cfg: &ClientConfig,
    limiter: &Limiter,
    make: impl Fn() -> RequestBuilder,
) -> Result<Response> {
    let _permit = limiter.acquire();
    let mut last_status = None;
    let mut last_message = String::new();
    for attempt in 0..=cfg.retry_limit {
        if attempt > 0 {
            let delay = cfg.backoff_base() * 2u32.saturating_pow(attempt - 1);
            log::debug!("retry {attempt} after {delay:?}");
            thread::sleep(delay);
        }
        match make().send() {
            Ok(resp) if resp.status().is_success() => return Ok(resp),
            Ok(resp) => {
                let status = resp.status().as_u16();
                last_status = Some(status);
                last_message = resp.text().unwrap_or_default();
                if !retryable(status) {
                    break;
                }
            }
            Err(e) => {
                last_message = e.to_string();
                if !(e.is_connect() || e.is_timeout() || e.is_request()) {
                    break;
                }
            }
        }
    }
    Err(Error::Transport {
        status: last_status,
        message: last_message,
    })
}
