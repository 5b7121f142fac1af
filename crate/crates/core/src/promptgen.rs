//! Prompt construction for emotional text generation.
//!
//! A [`GenerationConfig`] holds the four lists (narrative styles, scenarios,
//! emotions, max-token buckets). [`group_tuples`] expands them into
//! [`GenerationTuple`]s, [`render_prompt`] fills the dialogue or narrative
//! template for a tuple, and [`clean_text`] turns raw model output into an
//! accepted sentence or a rejection reason.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SYSTEM_PROMPT: &str =
    "You are a helpful assistant with human emotions and talking styles.";

pub const SCENARIOS: [&str; 24] = [
    "arts",
    "autos and vehicles",
    "business",
    "comedy",
    "crime",
    "education",
    "entertainment",
    "film and animation",
    "gaming",
    "health and fitness",
    "history",
    "howto and style",
    "kids and family",
    "leisure",
    "music",
    "news and politics",
    "nonprofits and activism",
    "people and blogs",
    "pets and animals",
    "religion and spirituality",
    "science and technology",
    "society and culture",
    "sports",
    "travel and events",
];

/// Eleven expressive TTS styles plus `neutral`.
pub const STYLES: [&str; 12] = [
    "angry",
    "cheerful",
    "excited",
    "friendly",
    "hopeful",
    "sad",
    "shouting",
    "terrified",
    "unfriendly",
    "whispering",
    "chat",
    "neutral",
];

pub const MAX_TOKENS: [u32; 3] = [10, 30, 50];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NarrativeStyle {
    Dialogue,
    Narrative,
}

impl NarrativeStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            NarrativeStyle::Dialogue => "dialogue",
            NarrativeStyle::Narrative => "narrative",
        }
    }
}

impl fmt::Display for NarrativeStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_samples_per_tuple() -> u32 {
    4
}

fn default_length_names() -> BTreeMap<u32, String> {
    canonical_length_names()
}

fn canonical_length_names() -> BTreeMap<u32, String> {
    [(10, "short"), (30, "middle"), (50, "long")]
        .into_iter()
        .map(|(k, v)| (k, v.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    pub narrative_styles: Vec<NarrativeStyle>,
    pub scenarios: Vec<String>,
    pub emotions: Vec<String>,
    pub max_tokens: Vec<u32>,
    #[serde(default = "default_samples_per_tuple")]
    pub samples_per_tuple: u32,
    /// Extension of the `{10: short, 30: middle, 50: long}` length map.
    #[serde(default = "default_length_names")]
    pub length_names: BTreeMap<u32, String>,
}

impl Default for GenerationConfig {
    /// The full 2 × 24 × 12 × 3 grid.
    fn default() -> Self {
        Self {
            narrative_styles: vec![NarrativeStyle::Dialogue, NarrativeStyle::Narrative],
            scenarios: SCENARIOS.iter().map(|s| s.to_string()).collect(),
            emotions: STYLES.iter().map(|s| s.to_string()).collect(),
            max_tokens: MAX_TOKENS.to_vec(),
            samples_per_tuple: default_samples_per_tuple(),
            length_names: canonical_length_names(),
        }
    }
}

fn check_list<T: Eq + std::hash::Hash + fmt::Debug>(name: &str, items: &[T]) -> Result<()> {
    if items.is_empty() {
        return Err(Error::Config(format!("`{name}` must not be empty")));
    }
    let mut seen = HashSet::new();
    for item in items {
        if !seen.insert(item) {
            return Err(Error::Config(format!(
                "duplicate entry {item:?} in `{name}`"
            )));
        }
    }
    Ok(())
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        check_list("narrative_styles", &self.narrative_styles)?;
        check_list("scenarios", &self.scenarios)?;
        check_list("emotions", &self.emotions)?;
        check_list("max_tokens", &self.max_tokens)?;
        if self.samples_per_tuple == 0 {
            return Err(Error::Config("`samples_per_tuple` must be positive".into()));
        }
        for &m in &self.max_tokens {
            if m == 0 {
                return Err(Error::Config(
                    "`max_tokens` entries must be positive".into(),
                ));
            }
            self.length_name(m)?;
        }
        Ok(())
    }

    pub fn length_name(&self, max_tokens: u32) -> Result<&str> {
        self.length_names
            .get(&max_tokens)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("no length name for max_tokens = {max_tokens}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenerationTuple {
    pub narrative_style: NarrativeStyle,
    pub scenario: String,
    pub emotion: String,
    pub max_tokens: u32,
}

/// Cartesian product of the four lists, nested in config order
/// (style, scenario, emotion, max tokens).
pub fn group_tuples(config: &GenerationConfig) -> Result<Vec<GenerationTuple>> {
    config.validate()?;
    let mut out = Vec::with_capacity(
        config.narrative_styles.len()
            * config.scenarios.len()
            * config.emotions.len()
            * config.max_tokens.len(),
    );
    for &narrative_style in &config.narrative_styles {
        for scenario in &config.scenarios {
            for emotion in &config.emotions {
                for &max_tokens in &config.max_tokens {
                    out.push(GenerationTuple {
                        narrative_style,
                        scenario: scenario.clone(),
                        emotion: emotion.clone(),
                        max_tokens,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Canonical length description: 10 → short, 30 → middle, 50 → long.
pub fn length2str(max_tokens: u32) -> Result<&'static str> {
    match max_tokens {
        10 => Ok("short"),
        30 => Ok("middle"),
        50 => Ok("long"),
        other => Err(Error::Config(format!(
            "no length name for max_tokens = {other}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Render with the canonical length map.
pub fn render_prompt(tuple: &GenerationTuple) -> Result<Prompt> {
    let length = length2str(tuple.max_tokens)?;
    Ok(render_with_length(tuple, length))
}

/// Render with a config's (possibly extended) length map.
pub fn render_prompt_with(config: &GenerationConfig, tuple: &GenerationTuple) -> Result<Prompt> {
    let length = config.length_name(tuple.max_tokens)?;
    Ok(render_with_length(tuple, length))
}

fn render_with_length(tuple: &GenerationTuple, length: &str) -> Prompt {
    let GenerationTuple {
        scenario,
        emotion,
        max_tokens,
        ..
    } = tuple;
    let user = match tuple.narrative_style {
        NarrativeStyle::Dialogue => format!(
            "In the context of {scenario}, say something in first-person or second-person that \
             expresses your feeling, or using the speaking style of {emotion}, as if you are \
             talking to somebody. Do not write any explanations and just answer the question. \
             What you say should be {length} length with no more than {max_tokens} words."
        ),
        NarrativeStyle::Narrative => format!(
            "In the context of {scenario}, describe a third-person scene that conveys the \
             emotion, or using the speaking style of {emotion}. Do not write any explanations \
             and just answer the question. What you say should be {length} length with no more \
             than {max_tokens} words."
        ),
    };
    Prompt {
        system: SYSTEM_PROMPT.to_string(),
        user: normalize_ws(&user),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Refusal,
    TooLong,
    Empty,
    Duplicate,
}

impl RejectReason {
    pub const ALL: [RejectReason; 4] = [
        RejectReason::Refusal,
        RejectReason::TooLong,
        RejectReason::Empty,
        RejectReason::Duplicate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Refusal => "refusal",
            RejectReason::TooLong => "too_long",
            RejectReason::Empty => "empty",
            RejectReason::Duplicate => "duplicate",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedText {
    pub tuple: GenerationTuple,
    pub raw: String,
    pub cleaned: Option<String>,
    pub rejected_reason: Option<RejectReason>,
}

impl GeneratedText {
    pub fn is_accepted(&self) -> bool {
        self.cleaned.is_some()
    }
}

const REFUSALS: [&str; 4] = [
    "as an ai",
    "i cannot",
    "i'm sorry, but",
    "i\u{2019}m sorry, but",
];

const QUOTE_PAIRS: [(char, char); 4] = [
    ('"', '"'),
    ('\'', '\''),
    ('\u{201C}', '\u{201D}'),
    ('\u{2018}', '\u{2019}'),
];

static LABEL_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(Response|Answer|Text)\s*:\s*").expect("valid regex"));

fn strip_quotes(s: &str) -> &str {
    let mut chars = s.chars();
    let (Some(first), Some(last)) = (chars.next(), chars.next_back()) else {
        return s;
    };
    if QUOTE_PAIRS
        .iter()
        .any(|&(open, close)| first == open && last == close)
    {
        &s[first.len_utf8()..s.len() - last.len_utf8()]
    } else {
        s
    }
}

fn strip_decorations(raw: &str) -> String {
    let mut current = raw.trim().to_string();
    // Each pass only shortens the string, so this terminates.
    loop {
        let unquoted = strip_quotes(&current).trim();
        let next = LABEL_PREFIX.replace(unquoted, "").trim().to_string();
        if next == current {
            return current;
        }
        current = next;
    }
}

pub fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Apply the cleaning chain to one raw completion.
///
/// Rules, in order: trim, strip a matching pair of surrounding quotes, strip a
/// `Response:`/`Answer:`/`Text:` label (repeated until nothing changes), refusal
/// filter, length filter (whitespace words), then case-insensitive dedupe
/// against `seen`. Accepted texts are inserted into `seen`.
pub fn clean_text(raw: &str, tuple: &GenerationTuple, seen: &mut HashSet<String>) -> GeneratedText {
    let reject = |reason| GeneratedText {
        tuple: tuple.clone(),
        raw: raw.to_string(),
        cleaned: None,
        rejected_reason: Some(reason),
    };

    let cleaned = strip_decorations(raw);
    let lowered_raw = raw.to_lowercase();
    if REFUSALS.iter().any(|p| lowered_raw.contains(p)) {
        return reject(RejectReason::Refusal);
    }
    let words = word_count(&cleaned);
    if words == 0 {
        return reject(RejectReason::Empty);
    }
    if words > tuple.max_tokens as usize {
        return reject(RejectReason::TooLong);
    }
    if !seen.insert(cleaned.to_lowercase()) {
        return reject(RejectReason::Duplicate);
    }
    GeneratedText {
        tuple: tuple.clone(),
        raw: raw.to_string(),
        cleaned: Some(cleaned),
        rejected_reason: None,
    }
}

/// One line of `prompts.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub tuple: GenerationTuple,
    pub system: String,
    pub user: String,
}

/// One line of `texts.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedText {
    pub id: String,
    pub tuple: GenerationTuple,
    pub text: String,
}

pub fn text_id(tuple_index: usize, sample_index: usize) -> String {
    format!("txt-{tuple_index:05}-{sample_index:02}")
}
