//! Plans emotion-congruent TTS jobs, prints one SSML request and runs the
//! offline mock synthesizer into a temporary directory.
//!
//! ```text
//! cargo run --example synthesize_speech
//! ```

use sersynth::config::DEFAULT_VOICES;
use sersynth::promptgen::{AcceptedText, GenerationTuple, NarrativeStyle, STYLES};
use sersynth::synthesis::{build_ssml, plan_jobs, ClientConfig, TtsClient};

fn main() -> sersynth::Result<()> {
    let texts: Vec<AcceptedText> = [
        ("cheerful", "We finally won the cup!"),
        ("sad", "I miss the old team & coach."),
    ]
    .iter()
    .enumerate()
    .map(|(i, (emotion, text))| AcceptedText {
        id: format!("txt-{i:05}-00"),
        tuple: GenerationTuple {
            narrative_style: NarrativeStyle::Dialogue,
            scenario: "sports".into(),
            emotion: (*emotion).into(),
            max_tokens: 10,
        },
        text: (*text).into(),
    })
    .collect();
    let voices: Vec<String> = DEFAULT_VOICES.iter().map(|v| v.to_string()).collect();
    let styles: Vec<String> = STYLES.iter().map(|s| s.to_string()).collect();

    let out = tempfile::tempdir().map_err(|e| sersynth::Error::io("tempdir", e))?;
    let jobs = plan_jobs(&texts, &voices, &styles, out.path())?;
    println!(
        "{} jobs for {} texts x {} voices",
        jobs.len(),
        texts.len(),
        voices.len()
    );
    println!("{}", build_ssml(&jobs[jobs.len() - 1])?);

    let tts = TtsClient::new(ClientConfig::mock(0))?;
    let written: u64 = tts
        .synthesize_all(&jobs)
        .into_iter()
        .collect::<sersynth::Result<Vec<_>>>()?
        .iter()
        .sum();
    for r in tts.take_records().iter().take(3) {
        println!("{} {} {} bytes", r.id, r.style, r.bytes);
    }
    println!("wrote {written} bytes under {}", out.path().display());
    Ok(())
}
