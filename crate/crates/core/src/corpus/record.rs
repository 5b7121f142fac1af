use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::promptgen::STYLES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Real,
    Synthetic,
}

impl Domain {
    /// Target used by the domain classifier.
    pub fn target(self) -> f64 {
        match self {
            Domain::Real => 0.0,
            Domain::Synthetic => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Happy,
    Sad,
    Angry,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Happy, Label::Sad, Label::Angry, Label::Neutral];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Happy => "happy",
            Label::Sad => "sad",
            Label::Angry => "angry",
            Label::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps a TTS style onto the four SER classes. `excited` is merged into
/// `happy` together with `cheerful`; styles outside the four classes map to
/// `None`.
pub fn map_style_to_label(style: &str) -> Result<Option<Label>> {
    if !STYLES.contains(&style) {
        return Err(Error::Validation(format!("unknown style `{style}`")));
    }
    Ok(match style {
        "cheerful" | "excited" => Some(Label::Happy),
        "sad" => Some(Label::Sad),
        "angry" => Some(Label::Angry),
        "neutral" => Some(Label::Neutral),
        _ => None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceRecord {
    pub id: String,
    pub domain: Domain,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<u8>,
    pub speaker: String,
    pub duration_s: f64,
    #[serde(default)]
    pub text: String,
    pub feature_path: String,
}

impl UtteranceRecord {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Validation("utterance with empty id".into()));
        }
        if self.domain == Domain::Real && !matches!(self.session, Some(1..=5)) {
            return Err(Error::Validation(format!(
                "real utterance {} needs a session in 1..=5, got {:?}",
                self.id, self.session
            )));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::Validation(format!(
                "utterance {} has non-positive duration {}",
                self.id, self.duration_s
            )));
        }
        Ok(())
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<UtteranceRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: UtteranceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Validation(format!("{}:{}: {e}", path.display(), n + 1)))?;
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_manifest(path: &Path, records: &[UtteranceRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
