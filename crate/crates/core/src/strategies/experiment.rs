use std::thread;

use super::{
    evaluate, train_adversarial, train_baseline, train_curriculum, train_random_mix,
    train_transfer, Strategy, TrainOutcome, TrainPlan,
};
use crate::corpus::{make_folds, sample_ratio, Corpus, FoldSplit, Utterance};
use crate::error::{Error, Result};
use crate::metrics::FoldResult;
use crate::model::SerModel;
use crate::seed;

/// Utterances of one fold, resolved against a corpus.
#[derive(Debug, Clone)]
pub struct FoldData<'a> {
    pub fold_index: u8,
    /// Seed of this fold's random streams.
    pub seed: u64,
    pub train: Vec<&'a Utterance>,
    pub val: Vec<&'a Utterance>,
    pub test: Vec<&'a Utterance>,
}

#[derive(Debug, Clone)]
pub struct FoldRun {
    pub split: FoldSplit,
    pub synthetic_ids: Vec<String>,
    pub outcome: TrainOutcome,
    pub result: FoldResult,
}

pub fn prepare_fold<'a>(
    corpus: &'a Corpus,
    split: &FoldSplit,
    plan: &TrainPlan,
) -> Result<FoldData<'a>> {
    Ok(FoldData {
        fold_index: split.fold_index,
        seed: seed::derive(plan.seed, u64::from(split.fold_index)),
        train: corpus.select(&split.train_ids)?,
        val: corpus.select(&split.val_ids)?,
        test: corpus.select(&split.test_ids)?,
    })
}

pub fn run_fold(corpus: &Corpus, split: &FoldSplit, plan: &TrainPlan) -> Result<FoldRun> {
    let fold = prepare_fold(corpus, split, plan)?;
    let synthetic_ids: Vec<String> = if plan.strategy.uses_synthetic() {
        sample_ratio(
            &corpus.synthetic_records(),
            fold.train.len(),
            plan.ratio,
            seed::derive(fold.seed, 2),
        )?
        .into_iter()
        .map(|r| r.id)
        .collect()
    } else {
        Vec::new()
    };
    let synthetic = corpus.select(&synthetic_ids)?;

    let outcome = match plan.strategy {
        Strategy::Baseline => train_baseline(&fold, plan),
        Strategy::RandomMix => train_random_mix(&fold, &synthetic, plan),
        Strategy::Adversarial => train_adversarial(&fold, &synthetic, plan),
        Strategy::Transfer => train_transfer(&fold, &synthetic, plan),
        Strategy::Curriculum => train_curriculum(&fold, &synthetic, plan),
    }?;
    let result =
        FoldResult::from_confusion(fold.fold_index, evaluate(&outcome.model, &fold.test)?)?;
    Ok(FoldRun {
        split: split.clone(),
        synthetic_ids,
        outcome,
        result,
    })
}

/// Scores `model` on the fold's test session.
pub fn evaluate_fold(corpus: &Corpus, split: &FoldSplit, model: &SerModel) -> Result<FoldResult> {
    FoldResult::from_confusion(
        split.fold_index,
        evaluate(model, &corpus.select(&split.test_ids)?)?,
    )
}

/// Runs every leave-one-session-out fold. With `jobs > 1` folds run on worker
/// threads; results do not depend on `jobs`.
pub fn run_experiment(corpus: &Corpus, plan: &TrainPlan, jobs: usize) -> Result<Vec<FoldRun>> {
    plan.validate()?;
    let splits = make_folds(&corpus.real_records(), plan.seed)?;
    if jobs <= 1 {
        return splits.iter().map(|s| run_fold(corpus, s, plan)).collect();
    }
    let per_worker = splits.len().div_ceil(jobs);
    let results: Vec<Result<Vec<FoldRun>>> = thread::scope(|scope| {
        let handles: Vec<_> = splits
            .chunks(per_worker)
            .map(|chunk| {
                scope.spawn(move || chunk.iter().map(|s| run_fold(corpus, s, plan)).collect())
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Validation("fold worker panicked".into())))
            })
            .collect()
    });
    let mut runs = Vec::with_capacity(splits.len());
    for r in results {
        runs.extend(r?);
    }
    Ok(runs)
}
