//! Declarative run configuration: one TOML file, flag overrides on top, and a
//! frozen resolved copy in every run directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{BlobConfig, Corpus};
use crate::error::{Error, Result};
use crate::promptgen::{GenerationConfig, STYLES};
use crate::strategies::TrainPlan;
use crate::synthesis::ClientConfig;

/// Five female and four male styled voices.
pub const DEFAULT_VOICES: [&str; 9] = [
    "en-US-JennyNeural",
    "en-US-AriaNeural",
    "en-US-SaraNeural",
    "en-US-JaneNeural",
    "en-US-NancyNeural",
    "en-US-GuyNeural",
    "en-US-DavisNeural",
    "en-US-JasonNeural",
    "en-US-TonyNeural",
];

pub const DEFAULT_SWEEP_RATIOS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Where training features come from. Exactly one source may be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blob: Option<BlobConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub name: String,
    /// Copied into the training plan and both mock clients on resolve.
    pub seed: u64,
    pub runs_dir: PathBuf,
    /// Fold-level worker threads.
    pub jobs: usize,
    pub model_name: String,
    pub temperature: f64,
    pub voices: Vec<String>,
    /// Styles the TTS backend accepts.
    pub styles: Vec<String>,
    pub sweep_ratios: Vec<f64>,
    pub generation: GenerationConfig,
    pub chat: ClientConfig,
    pub tts: ClientConfig,
    pub plan: TrainPlan,
    pub corpus: CorpusConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            seed: 0,
            runs_dir: "runs".into(),
            jobs: 1,
            model_name: "gpt-4".into(),
            temperature: 1.0,
            voices: DEFAULT_VOICES.iter().map(|s| s.to_string()).collect(),
            styles: STYLES.iter().map(|s| s.to_string()).collect(),
            sweep_ratios: DEFAULT_SWEEP_RATIOS.to_vec(),
            generation: GenerationConfig::default(),
            chat: ClientConfig {
                endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
                api_key_env_var: "OPENAI_API_KEY".into(),
                ..ClientConfig::default()
            },
            tts: ClientConfig {
                endpoint_url: "https://eastus.tts.speech.microsoft.com/cognitiveservices/v1".into(),
                api_key_env_var: "AZURE_SPEECH_KEY".into(),
                ..ClientConfig::default()
            },
            plan: TrainPlan::default(),
            corpus: CorpusConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mock: bool,
    pub jobs: Option<usize>,
    pub name: Option<String>,
}

impl RunConfig {
    /// Parses a config file. Tables are merged key by key over the defaults,
    /// so a partial `[chat]` keeps the default endpoint.
    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let defaults = Self::default().to_toml()?;
        let mut merged: toml::Table =
            toml::from_str(&defaults).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, user);
        let merged = toml::to_string(&merged).map_err(|e| Error::Config(e.to_string()))?;
        toml::from_str(&merged).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a config file. A relative `corpus.manifest` is taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(m) = &cfg.corpus.manifest {
            if m.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.corpus.manifest = Some(base.join(m));
            }
        }
        Ok(cfg)
    }

    /// Applies overrides, propagates the global seed, and validates.
    pub fn resolve(mut self, o: &Overrides) -> Result<Self> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(jobs) = o.jobs {
            self.jobs = jobs;
        }
        if let Some(name) = &o.name {
            self.name = name.clone();
        }
        if o.mock {
            self.chat.mock_mode = true;
            self.tts.mock_mode = true;
        }
        self.plan.seed = self.seed;
        self.chat.mock_seed = self.seed;
        self.tts.mock_seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(Error::Config(format!("invalid run name `{}`", self.name)));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::Config("temperature must be finite and >= 0".into()));
        }
        if self.voices.is_empty() || self.styles.is_empty() {
            return Err(Error::Config("voices and styles must not be empty".into()));
        }
        if self.corpus.manifest.is_some() && self.corpus.blob.is_some() {
            return Err(Error::Config(
                "set only one of corpus.manifest and corpus.blob".into(),
            ));
        }
        if let Some(blob) = &self.corpus.blob {
            blob.validate()?;
        }
        crate::metrics::validate_ratios(&self.sweep_ratios)?;
        self.generation.validate()?;
        self.chat.validate()?;
        self.tts.validate()?;
        self.plan.validate()
    }

    pub fn run_dir(&self) -> PathBuf {
        self.runs_dir.join(&self.name)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads the configured corpus. A blob corpus is first written under
    /// `<run dir>/blob/` and read back through its manifest.
    pub fn load_corpus(&self) -> Result<Corpus> {
        match (&self.corpus.manifest, &self.corpus.blob) {
            (Some(manifest), None) => Corpus::load(manifest),
            (None, Some(blob)) => {
                let (_, manifest) =
                    crate::corpus::generate_blob_corpus(blob, &self.run_dir().join("blob"))?;
                Corpus::load(&manifest)
            }
            (None, None) => Err(Error::Config(
                "no corpus configured: set corpus.manifest or corpus.blob, or pass --blob".into(),
            )),
            (Some(_), Some(_)) => Err(Error::Config(
                "set only one of corpus.manifest and corpus.blob".into(),
            )),
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
