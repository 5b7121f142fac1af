//! Renders prompts for a small slice of the generation grid and cleans mock
//! chat completions into emotional text.
//!
//! ```text
//! cargo run --example generate_texts
//! ```

use std::collections::HashSet;

use sersynth::promptgen::{
    clean_text, group_tuples, render_prompt, GenerationConfig, NarrativeStyle,
};
use sersynth::synthesis::{ChatClient, ChatRequest, ClientConfig};

fn main() -> sersynth::Result<()> {
    let config = GenerationConfig {
        narrative_styles: vec![NarrativeStyle::Dialogue, NarrativeStyle::Narrative],
        scenarios: vec!["sports".into()],
        emotions: vec!["angry".into(), "sad".into()],
        max_tokens: vec![10, 30],
        samples_per_tuple: 3,
        ..GenerationConfig::default()
    };
    let chat = ChatClient::new(ClientConfig::mock(7))?;
    let mut seen = HashSet::new();
    for tuple in group_tuples(&config)? {
        let prompt = render_prompt(&tuple)?;
        println!(
            "[{} / {} / {}] {}",
            tuple.narrative_style, tuple.emotion, tuple.max_tokens, prompt.user
        );
        let samples = chat.sample(&ChatRequest {
            system: prompt.system,
            user: prompt.user,
            n_samples: config.samples_per_tuple,
            temperature: 1.0,
            model_name: "gpt-4".into(),
        })?;
        for raw in samples {
            let out = clean_text(&raw, &tuple, &mut seen);
            match (&out.cleaned, out.rejected_reason) {
                (Some(text), _) => println!("    + {text}"),
                (None, Some(reason)) => println!("    - {} ({})", raw.trim(), reason.as_str()),
                (None, None) => unreachable!(),
            }
        }
    }
    Ok(())
}
