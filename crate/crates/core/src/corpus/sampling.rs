use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{map_style_to_label, Domain, Label, UtteranceRecord};
use crate::error::{Error, Result};
use crate::promptgen::{GenerationTuple, NarrativeStyle};
use crate::seed;

/// A synthesized utterance that still carries its generation tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCandidate {
    pub id: String,
    pub tuple: GenerationTuple,
    pub speaker: String,
    pub duration_s: f64,
    pub text: String,
    pub feature_path: String,
}

/// Keeps candidates with the given max-token bucket and narrative style whose
/// style maps onto one of `allowed_labels`, converting them to records.
pub fn select_synthetic_subset(
    candidates: &[SyntheticCandidate],
    max_token_bucket: u32,
    allowed_labels: &[Label],
    narrative_style: NarrativeStyle,
) -> Vec<UtteranceRecord> {
    candidates
        .iter()
        .filter(|c| {
            c.tuple.max_tokens == max_token_bucket && c.tuple.narrative_style == narrative_style
        })
        .filter_map(|c| {
            let label = map_style_to_label(&c.tuple.emotion).ok().flatten()?;
            allowed_labels.contains(&label).then(|| UtteranceRecord {
                id: c.id.clone(),
                domain: Domain::Synthetic,
                label,
                session: None,
                speaker: c.speaker.clone(),
                duration_s: c.duration_s,
                text: c.text.clone(),
                feature_path: c.feature_path.clone(),
            })
        })
        .collect()
}

/// Draws `round(real_train_count * ratio)` synthetic records without
/// replacement, stratified by label. Per-class quotas use largest-remainder
/// allocation so each class is within one item of its input proportion.
/// Output keeps the input order.
pub fn sample_ratio(
    synthetic: &[UtteranceRecord],
    real_train_count: usize,
    ratio: f64,
    seed: u64,
) -> Result<Vec<UtteranceRecord>> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::Validation(format!(
            "ratio must be positive, got {ratio}"
        )));
    }
    let wanted = (real_train_count as f64 * ratio).round() as usize;
    if wanted > synthetic.len() {
        return Err(Error::Validation(format!(
            "ratio {ratio} needs {wanted} synthetic utterances but only {} are available",
            synthetic.len()
        )));
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); Label::ALL.len()];
    for (i, r) in synthetic.iter().enumerate() {
        by_class[r.label.index()].push(i);
    }
    let total = synthetic.len().max(1);
    let mut quotas: Vec<usize> = by_class.iter().map(|c| c.len() * wanted / total).collect();
    let mut remainders: Vec<(usize, usize)> = by_class
        .iter()
        .enumerate()
        .map(|(k, c)| (c.len() * wanted % total, k))
        .collect();
    // Largest remainder first, ties to the lower class index.
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut missing = wanted - quotas.iter().sum::<usize>();
    for &(_, k) in &remainders {
        if missing == 0 {
            break;
        }
        if quotas[k] < by_class[k].len() {
            quotas[k] += 1;
            missing -= 1;
        }
    }

    let mut rng = seed::rng(seed);
    let mut chosen = Vec::with_capacity(wanted);
    for (members, &quota) in by_class.iter_mut().zip(&quotas) {
        members.shuffle(&mut rng);
        chosen.extend_from_slice(&members[..quota]);
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| synthetic[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synth(labels: &[Label]) -> Vec<UtteranceRecord> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &label)| UtteranceRecord {
                id: format!("s{i}"),
                domain: Domain::Synthetic,
                label,
                session: None,
                speaker: "v".into(),
                duration_s: 1.0,
                text: String::new(),
                feature_path: String::new(),
            })
            .collect()
    }

    fn candidate(
        id: &str,
        style: NarrativeStyle,
        emotion: &str,
        max_tokens: u32,
    ) -> SyntheticCandidate {
        SyntheticCandidate {
            id: id.into(),
            tuple: GenerationTuple {
                narrative_style: style,
                scenario: "music".into(),
                emotion: emotion.into(),
                max_tokens,
            },
            speaker: "v".into(),
            duration_s: 1.0,
            text: "x".into(),
            feature_path: format!("{id}.serf"),
        }
    }

    #[test]
    fn subset_filters() {
        let cands = vec![
            candidate("keep", NarrativeStyle::Dialogue, "excited", 10),
            candidate("long", NarrativeStyle::Dialogue, "sad", 30),
            candidate("hope", NarrativeStyle::Dialogue, "hopeful", 10),
            candidate("narr", NarrativeStyle::Narrative, "sad", 10),
            candidate("bad", NarrativeStyle::Dialogue, "bored", 10),
        ];
        let out = select_synthetic_subset(&cands, 10, &Label::ALL, NarrativeStyle::Dialogue);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "keep");
        assert_eq!(out[0].label, Label::Happy);
        assert_eq!(out[0].domain, Domain::Synthetic);
    }

    #[test]
    fn exact_count() {
        let labels: Vec<Label> = (0..4000).map(|i| Label::ALL[i % 4]).collect();
        let out = sample_ratio(&synth(&labels), 3540, 0.5, 1).unwrap();
        assert_eq!(out.len(), 1770);
    }

    #[test]
    fn too_many_requested() {
        let s = synth(&[Label::Sad; 10]);
        assert!(matches!(
            sample_ratio(&s, 100, 0.5, 0),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            sample_ratio(&s, 10, 0.0, 0),
            Err(Error::Validation(_))
        ));
    }

    proptest! {
        #[test]
        fn stratified_and_reproducible(
            labels in proptest::collection::vec(0usize..4, 1..200),
            real in 1usize..300,
            ratio in 0.01f64..2.0,
            seed in any::<u64>(),
        ) {
            let labels: Vec<Label> = labels.into_iter().map(|i| Label::ALL[i]).collect();
            let s = synth(&labels);
            let wanted = (real as f64 * ratio).round() as usize;
            let result = sample_ratio(&s, real, ratio, seed);
            if wanted > s.len() {
                prop_assert!(result.is_err());
                return Ok(());
            }
            let out = result.unwrap();
            prop_assert_eq!(out.len(), wanted);
            prop_assert_eq!(&out, &sample_ratio(&s, real, ratio, seed).unwrap());
            // brute-force recount against the ideal proportional share
            for label in Label::ALL {
                let have = labels.iter().filter(|&&l| l == label).count() as f64;
                let got = out.iter().filter(|r| r.label == label).count() as f64;
                let ideal = have * wanted as f64 / s.len() as f64;
                prop_assert!((got - ideal).abs() < 1.0 + 1e-9, "{label}: got {got}, ideal {ideal}");
            }
            let ids: std::collections::HashSet<_> = out.iter().map(|r| &r.id).collect();
            prop_assert_eq!(ids.len(), out.len());
        }
    }
}
