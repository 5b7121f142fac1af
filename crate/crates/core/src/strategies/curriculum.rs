use std::cmp::Ordering;

use super::trainer::{check_inputs, model_dims, train_plain, FoldRng, Tracker};
use super::{FoldData, TrainOutcome, TrainPlan};
use crate::corpus::Utterance;
use crate::error::{Error, Result};
use crate::model::{AdamW, SerModel};

/// Sorts by duration (ties by id) and splits into `k` contiguous chunks whose
/// sizes differ by at most one, larger chunks first.
pub fn curriculum_chunks<'a>(synthetic: &[&'a Utterance], k: usize) -> Vec<Vec<&'a Utterance>> {
    let mut sorted = synthetic.to_vec();
    sorted.sort_by(|a, b| {
        a.record
            .duration_s
            .partial_cmp(&b.record.duration_s)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.record.id.cmp(&b.record.id))
    });
    let k = k.max(1);
    let (base, extra) = (sorted.len() / k, sorted.len() % k);
    let mut chunks = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        chunks.push(sorted[start..start + len].to_vec());
        start += len;
    }
    chunks
}

/// Number of active synthetic items at 0-based epoch `epoch`: chunks
/// `0..=min(epoch / interval, K - 1)`.
pub fn active_count(chunk_sizes: &[usize], interval: usize, epoch: usize) -> usize {
    if chunk_sizes.is_empty() {
        return 0;
    }
    let last = (epoch / interval.max(1)).min(chunk_sizes.len() - 1);
    chunk_sizes[..=last].iter().sum()
}

pub fn train_curriculum(
    fold: &FoldData<'_>,
    synthetic: &[&Utterance],
    plan: &TrainPlan,
) -> Result<TrainOutcome> {
    check_inputs(fold, plan)?;
    if synthetic.is_empty() {
        return Err(Error::Validation(
            "curriculum learning needs synthetic data".into(),
        ));
    }
    let ordered: Vec<&Utterance> = curriculum_chunks(synthetic, plan.curriculum_chunks)
        .into_iter()
        .flatten()
        .collect();
    let sizes: Vec<usize> = curriculum_chunks(synthetic, plan.curriculum_chunks)
        .iter()
        .map(Vec::len)
        .collect();

    let mut rngs = FoldRng::new(fold.seed);
    let mut model = SerModel::new(model_dims(fold, plan)?, plan.repr_mode, &mut rngs.init);
    let mut opt = AdamW::new(plan.optimizer);
    let mut tracker = Tracker::new(fold, plan);
    train_plain(
        plan,
        &mut model,
        &mut opt,
        &mut rngs.shuffle,
        &mut tracker,
        plan.epochs,
        |e| {
            let n = active_count(&sizes, plan.curriculum_interval, e);
            let items = fold.train.iter().chain(&ordered[..n]).copied().collect();
            (items, n)
        },
    )?;
    tracker.finish(model, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_schedule() {
        let sizes = [2, 2, 2, 2, 2];
        let expected = |e: usize| match e {
            0..=4 => 2,
            5..=9 => 4,
            10..=14 => 6,
            15..=19 => 8,
            _ => 10,
        };
        for e in 0..50 {
            assert_eq!(active_count(&sizes, 5, e), expected(e), "epoch {e}");
        }
    }

    #[test]
    fn uneven_chunks() {
        assert_eq!(active_count(&[3, 3, 2], 2, 0), 3);
        assert_eq!(active_count(&[3, 3, 2], 2, 100), 8);
        assert_eq!(active_count(&[], 2, 3), 0);
    }
}
