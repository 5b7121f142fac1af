use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};

use super::http::{build_client, send_with_retry, Limiter};
use super::{build_ssml, ClientConfig, SynthesisJob};
use crate::error::{Error, Result};

const SAMPLE_RATE: u32 = 16_000;
const BITS_PER_SAMPLE: u16 = 16;
const CHANNELS: u16 = 1;

/// Size of the mock output: 44-byte RIFF header + one second of 16-bit mono.
pub const MOCK_WAV_BYTES: u64 = 44 + SAMPLE_RATE as u64 * 2;

/// One second of silence as a canonical 16 kHz, 16-bit mono PCM RIFF file.
pub fn silent_wav() -> Vec<u8> {
    let data_len = SAMPLE_RATE * u32::from(CHANNELS) * u32::from(BITS_PER_SAMPLE / 8);
    let block_align = CHANNELS * BITS_PER_SAMPLE / 8;
    let byte_rate = SAMPLE_RATE * u32::from(block_align);
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&CHANNELS.to_le_bytes());
    out.extend_from_slice(&SAMPLE_RATE.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&BITS_PER_SAMPLE.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    out.resize(44 + data_len as usize, 0);
    out
}

/// One line of the synthesis manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisRecord {
    pub id: String,
    pub text: String,
    pub voice: String,
    pub style: String,
    pub output_path: String,
    pub bytes: u64,
}

impl SynthesisRecord {
    pub fn new(job: &SynthesisJob, bytes: u64) -> Self {
        Self {
            id: job.id.clone(),
            text: job.text.clone(),
            voice: job.speaker_voice.clone(),
            style: job.style.clone(),
            output_path: job.output_path.clone(),
            bytes,
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Emotional TTS client. Shareable across threads; completed jobs are recorded
/// and can be drained with [`TtsClient::take_records`].
pub struct TtsClient {
    cfg: ClientConfig,
    live: Option<(Client, String)>,
    limiter: Limiter,
    records: Mutex<Vec<SynthesisRecord>>,
}

impl TtsClient {
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
            records: Mutex::new(Vec::new()),
        })
    }

    /// Synthesizes one job to `job.output_path`, returning the byte count.
    pub fn synthesize(&self, job: &SynthesisJob) -> Result<u64> {
        let ssml = build_ssml(job)?;
        let path = Path::new(&job.output_path);
        let bytes = match &self.live {
            None => {
                let wav = silent_wav();
                write_file(path, &wav)?;
                wav.len() as u64
            }
            Some((client, key)) => {
                let resp = send_with_retry(&self.cfg, &self.limiter, || {
                    client
                        .post(&self.cfg.endpoint_url)
                        .header("Content-Type", "application/ssml+xml")
                        .header("X-Microsoft-OutputFormat", "riff-16khz-16bit-mono-pcm")
                        .header("Ocp-Apim-Subscription-Key", key.as_str())
                        .body(ssml.clone())
                })?;
                let audio = resp.bytes().map_err(|e| Error::Transport {
                    status: None,
                    message: format!("reading audio body: {e}"),
                })?;
                write_file(path, &audio)?;
                audio.len() as u64
            }
        };
        self.records
            .lock()
            .expect("record lock poisoned")
            .push(SynthesisRecord::new(job, bytes));
        Ok(bytes)
    }

    /// Runs all jobs with at most `max_concurrent` worker threads. Results are
    /// returned in job order.
    pub fn synthesize_all(&self, jobs: &[SynthesisJob]) -> Vec<Result<u64>> {
        let next = AtomicUsize::new(0);
        let results: Vec<Mutex<Option<Result<u64>>>> =
            jobs.iter().map(|_| Mutex::new(None)).collect();
        let workers = self.cfg.max_concurrent.min(jobs.len()).max(1);
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(job) = jobs.get(i) else { break };
                    let r = self.synthesize(job);
                    *results[i].lock().expect("result lock poisoned") = Some(r);
                });
            }
        });
        results
            .into_iter()
            .map(|m| {
                m.into_inner()
                    .expect("result lock poisoned")
                    .expect("every job ran")
            })
            .collect()
    }

    /// Completed jobs, sorted by id.
    pub fn take_records(&self) -> Vec<SynthesisRecord> {
        let mut records = std::mem::take(&mut *self.records.lock().expect("record lock poisoned"));
        records.sort_by(|a, b| a.id.cmp(&b.id));
        records
    }
}

pub fn tts_synthesize(job: &SynthesisJob, cfg: &ClientConfig) -> Result<u64> {
    TtsClient::new(cfg.clone())?.synthesize(job)
}
