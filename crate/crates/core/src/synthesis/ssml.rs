use super::SynthesisJob;
use crate::error::{Error, Result};

pub fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn reject_control(field: &str, value: &str) -> Result<()> {
    if let Some(c) = value.chars().find(|c| c.is_control()) {
        return Err(Error::Validation(format!(
            "{field} contains control character U+{:04X}",
            c as u32
        )));
    }
    Ok(())
}

/// Single-line SSML document wrapping the text in an `express-as` element.
pub fn build_ssml(job: &SynthesisJob) -> Result<String> {
    if job.text.trim().is_empty() {
        return Err(Error::Validation("synthesis text is empty".into()));
    }
    reject_control("text", &job.text)?;
    reject_control("voice", &job.speaker_voice)?;
    reject_control("style", &job.style)?;
    Ok(format!(
        "<speak version=\"1.0\" xmlns=\"http://www.w3.org/2001/10/synthesis\" \
         xmlns:mstts=\"https://www.w3.org/2001/mstts\" xml:lang=\"en-US\">\
         <voice name=\"{}\"><mstts:express-as style=\"{}\">{}</mstts:express-as></voice></speak>",
        escape_xml(&job.speaker_voice),
        escape_xml(&job.style),
        escape_xml(&job.text),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn job(text: &str, voice: &str, style: &str) -> SynthesisJob {
        SynthesisJob {
            id: "j".into(),
            text: text.into(),
            speaker_voice: voice.into(),
            style: style.into(),
            output_path: "j.wav".into(),
        }
    }

    #[test]
    fn exact_document() {
        let doc = build_ssml(&job("Hello.", "VoiceA", "cheerful")).unwrap();
        assert_eq!(
            doc,
            r#"<speak version="1.0" xmlns="http://www.w3.org/2001/10/synthesis" xmlns:mstts="https://www.w3.org/2001/mstts" xml:lang="en-US"><voice name="VoiceA"><mstts:express-as style="cheerful">Hello.</mstts:express-as></voice></speak>"#
        );
    }

    #[test]
    fn escapes_text() {
        let doc = build_ssml(&job("a < b", "V", "sad")).unwrap();
        assert!(doc.contains(">a &lt; b<"));
    }

    #[test]
    fn neutral_still_uses_express_as() {
        let doc = build_ssml(&job("ok", "V", "neutral")).unwrap();
        assert!(doc.contains(r#"<mstts:express-as style="neutral">"#));
    }

    #[test]
    fn control_characters_rejected() {
        assert!(matches!(
            build_ssml(&job("a\u{7}b", "V", "sad")),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            build_ssml(&job("line\nbreak", "V", "sad")),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            build_ssml(&job("   ", "V", "sad")),
            Err(Error::Validation(_))
        ));
    }

    proptest! {
        #[test]
        fn well_formed_and_round_trips(text in "[a-zA-Z0-9 <>&\"'.,!?éü]{1,60}") {
            prop_assume!(!text.trim().is_empty());
            let doc = build_ssml(&job(&text, "en-US-Voice", "angry")).unwrap();
            let parsed = roxmltree::Document::parse(&doc).unwrap();
            let express = parsed
                .descendants()
                .find(|n| n.tag_name().name() == "express-as")
                .unwrap();
            prop_assert_eq!(express.attribute("style"), Some("angry"));
            prop_assert_eq!(express.text().unwrap_or(""), text.as_str());
        }
    }
}
