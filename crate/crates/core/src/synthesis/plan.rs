use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::promptgen::AcceptedText;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisJob {
    pub id: String,
    pub text: String,
    pub speaker_voice: String,
    pub style: String,
    pub output_path: String,
}

/// One job per (text, voice), text-major, with the style forced to the text's
/// emotion so speech and text stay congruent.
pub fn plan_jobs(
    texts: &[AcceptedText],
    voices: &[String],
    styles: &[String],
    out_dir: &Path,
) -> Result<Vec<SynthesisJob>> {
    if texts.is_empty() || voices.is_empty() || styles.is_empty() {
        return Err(Error::Validation(
            "plan_jobs needs non-empty texts, voices and styles".into(),
        ));
    }
    let mut jobs = Vec::with_capacity(texts.len() * voices.len());
    for text in texts {
        let style = &text.tuple.emotion;
        if !styles.contains(style) {
            return Err(Error::Validation(format!(
                "text {} has emotion `{style}` which is not a configured style",
                text.id
            )));
        }
        if text.text.trim().is_empty() {
            return Err(Error::Validation(format!("text {} is empty", text.id)));
        }
        for voice in voices {
            let id = format!("{}_{}", text.id, voice);
            jobs.push(SynthesisJob {
                output_path: out_dir
                    .join(format!("{id}.wav"))
                    .to_string_lossy()
                    .into_owned(),
                id,
                text: text.text.clone(),
                speaker_voice: voice.clone(),
                style: style.clone(),
            });
        }
    }
    Ok(jobs)
}
