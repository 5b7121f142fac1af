//! Utterance manifests, the SERF feature format, fold splitting, synthetic
//! subset selection and the Gaussian-blob stand-in corpus.

mod blob;
mod folds;
mod record;
mod sampling;
mod serf;

use std::collections::HashMap;
use std::path::Path;

pub use blob::{generate_blob, generate_blob_corpus, BlobConfig};
pub use folds::{make_folds, FoldSplit, NUM_SESSIONS};
pub use record::{
    map_style_to_label, read_manifest, write_manifest, Domain, Label, UtteranceRecord,
};
pub use sampling::{sample_ratio, select_synthetic_subset, SyntheticCandidate};
pub use serf::{decode_features, encode_features, read_features, write_features, FeatureTensor};

use crate::error::{Error, Result};

/// Utterance count of the four-class IEMOCAP setup; external manifests that
/// claim to be IEMOCAP are compared against it.
pub const IEMOCAP_UTTERANCES: usize = 5531;

#[derive(Debug, Clone)]
pub struct Utterance {
    pub record: UtteranceRecord,
    pub features: FeatureTensor,
}

/// Real and synthetic utterances with features loaded in memory.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub real: Vec<Utterance>,
    pub synthetic: Vec<Utterance>,
}

impl Corpus {
    pub fn from_utterances(utterances: impl IntoIterator<Item = Utterance>) -> Result<Self> {
        let mut corpus = Corpus::default();
        for u in utterances {
            u.record.validate()?;
            match u.record.domain {
                Domain::Real => corpus.real.push(u),
                Domain::Synthetic => corpus.synthetic.push(u),
            }
        }
        corpus.check_shapes()?;
        Ok(corpus)
    }

    /// Loads a manifest and every feature file it references. Feature paths
    /// are resolved relative to the manifest's directory.
    pub fn load(manifest: &Path) -> Result<Self> {
        let records = read_manifest(manifest)?;
        let base = manifest.parent().unwrap_or_else(|| Path::new("."));
        let utterances = records
            .into_iter()
            .map(|record| {
                let features = read_features(&base.join(&record.feature_path))?;
                Ok(Utterance { record, features })
            })
            .collect::<Result<Vec<_>>>()?;
        let corpus = Self::from_utterances(utterances)?;
        if corpus.real.len() != IEMOCAP_UTTERANCES {
            log::info!(
                "manifest has {} real utterances (four-class IEMOCAP has {IEMOCAP_UTTERANCES})",
                corpus.real.len()
            );
        }
        Ok(corpus)
    }

    fn check_shapes(&self) -> Result<()> {
        let mut all = self.real.iter().chain(&self.synthetic);
        let Some(first) = all.next() else {
            return Ok(());
        };
        let (layers, dims) = (first.features.layers(), first.features.dims());
        let mut ids = HashMap::new();
        ids.insert(first.record.id.as_str(), ());
        for u in all {
            if u.features.layers() != layers || u.features.dims() != dims {
                return Err(Error::Validation(format!(
                    "utterance {} has {}x{} features, expected {layers}x{dims}",
                    u.record.id,
                    u.features.layers(),
                    u.features.dims()
                )));
            }
            if ids.insert(u.record.id.as_str(), ()).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate utterance id {}",
                    u.record.id
                )));
            }
        }
        Ok(())
    }

    /// `(layers, dims)` shared by every utterance.
    pub fn feature_shape(&self) -> Option<(usize, usize)> {
        self.real
            .iter()
            .chain(&self.synthetic)
            .next()
            .map(|u| (u.features.layers(), u.features.dims()))
    }

    pub fn real_records(&self) -> Vec<UtteranceRecord> {
        self.real.iter().map(|u| u.record.clone()).collect()
    }

    pub fn synthetic_records(&self) -> Vec<UtteranceRecord> {
        self.synthetic.iter().map(|u| u.record.clone()).collect()
    }

    /// Looks up utterances by id, preserving the order of `ids`.
    pub fn select<'a>(&'a self, ids: &[String]) -> Result<Vec<&'a Utterance>> {
        let index: HashMap<&str, &Utterance> = self
            .real
            .iter()
            .chain(&self.synthetic)
            .map(|u| (u.record.id.as_str(), u))
            .collect();
        ids.iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::Validation(format!("unknown utterance id {id}")))
            })
            .collect()
    }
}
