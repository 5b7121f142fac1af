use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    write_features, write_manifest, Domain, FeatureTensor, Label, Utterance, UtteranceRecord,
};
use crate::error::{Error, Result};
use crate::seed;

/// Gaussian-blob stand-in for frozen SSL features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlobConfig {
    /// Real utterances; labels cycle through the four classes.
    pub n_real: usize,
    pub n_synthetic: usize,
    pub dims: usize,
    pub layers: usize,
    pub frames_min: usize,
    pub frames_max: usize,
    pub class_separation: f64,
    pub noise_std: f64,
    pub domain_shift: f64,
    /// Seconds per frame, used for `duration_s`.
    pub frame_seconds: f64,
    pub seed: u64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        Self {
            n_real: 100,
            n_synthetic: 100,
            dims: 32,
            layers: 3,
            frames_min: 8,
            frames_max: 24,
            class_separation: 5.0,
            noise_std: 1.0,
            domain_shift: 3.0,
            frame_seconds: 0.02,
            seed: 42,
        }
    }
}

impl BlobConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return Err(Error::Config("class_separation must be positive".into()));
        }
        if self.dims < Label::ALL.len() {
            return Err(Error::Config(format!(
                "blob corpus needs dims >= {} for distinct class directions",
                Label::ALL.len()
            )));
        }
        if self.layers == 0 || self.frames_min == 0 || self.frames_min > self.frames_max {
            return Err(Error::Config("invalid blob layers / frame range".into()));
        }
        if !(self.noise_std >= 0.0 && self.domain_shift.is_finite() && self.frame_seconds > 0.0) {
            return Err(Error::Config(
                "invalid blob noise / shift / frame_seconds".into(),
            ));
        }
        Ok(())
    }
}

fn generate_domain(cfg: &BlobConfig, domain: Domain, n: usize) -> Result<Vec<Utterance>> {
    let d = cfg.dims;
    let tag = match domain {
        Domain::Real => 0,
        Domain::Synthetic => 1,
    };
    let mut rng = seed::rng_for(cfg.seed, tag);
    let noise = Normal::new(0.0, cfg.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let shift = match domain {
        Domain::Real => 0.0,
        Domain::Synthetic => cfg.domain_shift / (d as f64).sqrt(),
    };
    let prefix = match domain {
        Domain::Real => "real",
        Domain::Synthetic => "synth",
    };

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        {
            let label = Label::ALL[i % Label::ALL.len()];
            let frames = rng.random_range(cfg.frames_min..=cfg.frames_max);
            let mut base = vec![0.0f64; frames * d];
            for (k, v) in base.iter_mut().enumerate() {
                let mean = if k % d == label.index() {
                    cfg.class_separation
                } else {
                    0.0
                };
                *v = mean + shift + noise.sample(&mut rng);
            }
            let mut data = Vec::with_capacity(cfg.layers * base.len());
            for l in 0..cfg.layers {
                let scale = 1.0 / (1.0 + l as f64);
                data.extend(base.iter().map(|v| (v * scale) as f32));
            }
            let id = format!("{prefix}-{i:05}");
            let (session, speaker) = match domain {
                Domain::Real => {
                    let session = (i % 5) as u8 + 1;
                    (
                        Some(session),
                        format!("Ses{session:02}{}", if i % 2 == 0 { 'F' } else { 'M' }),
                    )
                }
                Domain::Synthetic => (None, format!("voice{}", i % 9)),
            };
            out.push(Utterance {
                record: UtteranceRecord {
                    feature_path: format!("features/{id}.serf"),
                    id,
                    domain,
                    label,
                    session,
                    speaker,
                    duration_s: frames as f64 * cfg.frame_seconds,
                    text: format!("{label} blob"),
                },
                features: FeatureTensor::new(cfg.layers, frames, d, data)?,
            });
        }
    }
    Ok(out)
}

/// Generates the corpus in memory. Class `k` is centred on
/// `class_separation * e_k`; synthetic utterances are additionally offset by
/// `domain_shift` along the unit all-ones direction. Layer `l` is the base
/// signal scaled by `1 / (1 + l)`. Real utterances get sessions 1..=5
/// round-robin, labels cycle with period four.
pub fn generate_blob(cfg: &BlobConfig) -> Result<Vec<Utterance>> {
    cfg.validate()?;
    let mut all = generate_domain(cfg, Domain::Real, cfg.n_real)?;
    all.extend(generate_domain(cfg, Domain::Synthetic, cfg.n_synthetic)?);
    Ok(all)
}

/// Writes the corpus under `out_dir` (`manifest.jsonl` + `features/*.serf`)
/// and returns the manifest path.
pub fn generate_blob_corpus(
    cfg: &BlobConfig,
    out_dir: &Path,
) -> Result<(Vec<UtteranceRecord>, PathBuf)> {
    let utterances = generate_blob(cfg)?;
    for u in &utterances {
        write_features(&out_dir.join(&u.record.feature_path), &u.features)?;
    }
    let records: Vec<UtteranceRecord> = utterances.into_iter().map(|u| u.record).collect();
    let manifest = out_dir.join("manifest.jsonl");
    write_manifest(&manifest, &records)?;
    Ok((records, manifest))
}
