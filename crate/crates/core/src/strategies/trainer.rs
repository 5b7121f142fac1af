use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CheckpointPolicy, FoldData, Strategy, TrainPlan};
use crate::corpus::{Label, Utterance};
use crate::error::{Error, Result};
use crate::metrics::{wa_ua, ConfusionMatrix};
use crate::model::{cross_entropy, AdamW, AdamWConfig, DomainHead, ModelDims, SerGrads, SerModel};
use crate::seed;

/// One line of `epochs.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub fold: u8,
    pub strategy: Strategy,
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_wa: f64,
    pub val_ua: f64,
    pub active_synth: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the selected epoch.
    pub model: SerModel,
    pub domain_head: Option<DomainHead>,
    pub logs: Vec<EpochLog>,
    /// 1-based epoch the parameters come from.
    pub selected_epoch: usize,
}

/// `LastEpoch` picks the final epoch; `BestVal` the highest validation WA,
/// earliest on ties. Returns a 1-based epoch.
pub fn select_checkpoint(logs: &[EpochLog], policy: CheckpointPolicy) -> Result<usize> {
    let last = logs
        .last()
        .ok_or_else(|| Error::Validation("no epochs logged".into()))?;
    Ok(match policy {
        CheckpointPolicy::LastEpoch => last.epoch,
        CheckpointPolicy::BestVal => {
            let mut best = &logs[0];
            for log in &logs[1..] {
                if log.val_wa > best.val_wa {
                    best = log;
                }
            }
            best.epoch
        }
    })
}

pub fn evaluate(model: &SerModel, items: &[&Utterance]) -> Result<ConfusionMatrix> {
    let mut m = ConfusionMatrix::new(model.dims.classes);
    for u in items {
        m.record(u.record.label.index(), model.predict(&u.features)?)?;
    }
    Ok(m)
}

pub(crate) fn model_dims(fold: &FoldData<'_>, plan: &TrainPlan) -> Result<ModelDims> {
    let first = fold.train.first().or(fold.val.first()).ok_or_else(|| {
        Error::Validation(format!("fold {} has no training data", fold.fold_index))
    })?;
    Ok(ModelDims {
        layers: first.features.layers(),
        dims: first.features.dims(),
        hidden: plan.hidden,
        classes: Label::ALL.len(),
    })
}

/// Per-fold random state: model init and shuffling use separate streams.
pub(crate) struct FoldRng {
    pub init: ChaCha8Rng,
    pub shuffle: ChaCha8Rng,
}

impl FoldRng {
    pub fn new(fold_seed: u64) -> Self {
        Self {
            init: seed::rng_for(fold_seed, 0),
            shuffle: seed::rng_for(fold_seed, 1),
        }
    }
}

pub(crate) fn check_inputs(fold: &FoldData<'_>, plan: &TrainPlan) -> Result<()> {
    plan.validate()?;
    if fold.train.is_empty() || fold.val.is_empty() {
        return Err(Error::Validation(format!(
            "fold {} needs non-empty train and validation sets",
            fold.fold_index
        )));
    }
    for label in Label::ALL {
        if !fold.train.iter().any(|u| u.record.label == label) {
            log::warn!(
                "fold {}: no `{label}` utterances in the training set",
                fold.fold_index
            );
        }
    }
    Ok(())
}

/// Mean-gradient AdamW step on the emotion loss. Returns the summed loss.
pub(crate) fn emotion_step(
    model: &mut SerModel,
    opt: &mut AdamW,
    batch: &[&Utterance],
) -> Result<f64> {
    let mut grads = SerGrads::zeros_like(model);
    let mut loss_sum = 0.0;
    for u in batch {
        let trace = model.forward(&u.features)?;
        let (loss, dlogits) = cross_entropy(&trace.logits, u.record.label.index());
        loss_sum += loss;
        grads.add_assign(&model.backward(&trace, &dlogits)?);
    }
    grads.scale(1.0 / batch.len() as f64);
    model.apply_all(opt, &grads)?;
    Ok(loss_sum)
}

/// One shuffled pass over `items`. Returns the mean per-utterance loss.
pub(crate) fn emotion_epoch(
    model: &mut SerModel,
    opt: &mut AdamW,
    items: &[&Utterance],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut order: Vec<&Utterance> = items.to_vec();
    order.shuffle(rng);
    let mut loss_sum = 0.0;
    for batch in order.chunks(batch_size) {
        loss_sum += emotion_step(model, opt, batch)?;
    }
    Ok(loss_sum / items.len() as f64)
}

/// Collects epoch logs and keeps the checkpoint required by the policy.
pub(crate) struct Tracker<'a> {
    fold: &'a FoldData<'a>,
    strategy: Strategy,
    policy: CheckpointPolicy,
    logs: Vec<EpochLog>,
    best: Option<(f64, SerModel, Option<DomainHead>)>,
}

impl<'a> Tracker<'a> {
    pub fn new(fold: &'a FoldData<'a>, plan: &TrainPlan) -> Self {
        let policy = plan.effective_policy();
        if policy != plan.checkpoint_policy {
            log::debug!("{} keeps the last-epoch checkpoint", plan.strategy);
        }
        Self {
            fold,
            strategy: plan.strategy,
            policy,
            logs: Vec::new(),
            best: None,
        }
    }

    pub fn epochs_done(&self) -> usize {
        self.logs.len()
    }

    pub fn end_epoch(
        &mut self,
        model: &SerModel,
        head: Option<&DomainHead>,
        train_loss: f64,
        active_synth: usize,
    ) -> Result<()> {
        let val = wa_ua(&evaluate(model, &self.fold.val)?)?;
        if !train_loss.is_finite() || !model.is_finite() {
            return Err(Error::Numerical {
                param: format!(
                    "fold {} epoch {}",
                    self.fold.fold_index,
                    self.logs.len() + 1
                ),
            });
        }
        self.logs.push(EpochLog {
            fold: self.fold.fold_index,
            strategy: self.strategy,
            epoch: self.logs.len() + 1,
            train_loss,
            val_wa: val.wa,
            val_ua: val.ua,
            active_synth,
        });
        if self.policy == CheckpointPolicy::BestVal
            && self.best.as_ref().is_none_or(|(wa, ..)| val.wa > *wa)
        {
            self.best = Some((val.wa, model.clone(), head.cloned()));
        }
        Ok(())
    }

    pub fn finish(self, model: SerModel, head: Option<DomainHead>) -> Result<TrainOutcome> {
        let selected_epoch = select_checkpoint(&self.logs, self.policy)?;
        let (model, domain_head) = match (self.policy, self.best) {
            (CheckpointPolicy::BestVal, Some((_, m, h))) => (m, h),
            _ => (model, head),
        };
        Ok(TrainOutcome {
            model,
            domain_head,
            logs: self.logs,
            selected_epoch,
        })
    }
}

/// Shared loop for strategies whose epochs are plain shuffled passes over a
/// (possibly epoch-dependent) item list.
pub(crate) fn train_plain<'a, F>(
    plan: &TrainPlan,
    model: &mut SerModel,
    opt: &mut AdamW,
    rng: &mut ChaCha8Rng,
    tracker: &mut Tracker<'a>,
    epochs: usize,
    mut items_for_epoch: F,
) -> Result<()>
where
    F: FnMut(usize) -> (Vec<&'a Utterance>, usize),
{
    for e in 0..epochs {
        let (items, active_synth) = items_for_epoch(e);
        let loss = emotion_epoch(model, opt, &items, plan.batch_size, rng)?;
        tracker.end_epoch(model, None, loss, active_synth)?;
    }
    Ok(())
}

pub fn train_baseline(fold: &FoldData<'_>, plan: &TrainPlan) -> Result<TrainOutcome> {
    check_inputs(fold, plan)?;
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
        |_| (fold.train.clone(), 0),
    )?;
    tracker.finish(model, None)
}

pub fn train_random_mix(
    fold: &FoldData<'_>,
    synthetic: &[&Utterance],
    plan: &TrainPlan,
) -> Result<TrainOutcome> {
    check_inputs(fold, plan)?;
    let mut rngs = FoldRng::new(fold.seed);
    let mut model = SerModel::new(model_dims(fold, plan)?, plan.repr_mode, &mut rngs.init);
    let mut opt = AdamW::new(plan.optimizer);
    let mut tracker = Tracker::new(fold, plan);
    let mixed: Vec<&Utterance> = fold.train.iter().chain(synthetic).copied().collect();
    train_plain(
        plan,
        &mut model,
        &mut opt,
        &mut rngs.shuffle,
        &mut tracker,
        plan.epochs,
        |_| (mixed.clone(), synthetic.len()),
    )?;
    tracker.finish(model, None)
}

/// Phase 1 trains on synthetic data only; phase 2 continues on real data with
/// fresh optimizer moments and the learning rate scaled by
/// `transfer_lr_factor`.
pub fn train_transfer(
    fold: &FoldData<'_>,
    synthetic: &[&Utterance],
    plan: &TrainPlan,
) -> Result<TrainOutcome> {
    check_inputs(fold, plan)?;
    if synthetic.is_empty() {
        return Err(Error::Validation(
            "transfer learning needs synthetic data".into(),
        ));
    }
    let mut rngs = FoldRng::new(fold.seed);
    let mut model = SerModel::new(model_dims(fold, plan)?, plan.repr_mode, &mut rngs.init);
    let mut tracker = Tracker::new(fold, plan);

    let mut opt = AdamW::new(plan.optimizer);
    let phase1 = plan.transfer_phase1_epochs.unwrap_or(plan.epochs);
    let synth: Vec<&Utterance> = synthetic.to_vec();
    train_plain(
        plan,
        &mut model,
        &mut opt,
        &mut rngs.shuffle,
        &mut tracker,
        phase1,
        |_| (synth.clone(), synth.len()),
    )?;

    let mut opt = AdamW::new(phase2_optimizer(plan));
    train_plain(
        plan,
        &mut model,
        &mut opt,
        &mut rngs.shuffle,
        &mut tracker,
        plan.epochs,
        |_| (fold.train.clone(), 0),
    )?;
    tracker.finish(model, None)
}

pub(crate) fn phase2_optimizer(plan: &TrainPlan) -> AdamWConfig {
    AdamWConfig {
        lr: plan.optimizer.lr * plan.transfer_lr_factor,
        ..plan.optimizer
    }
}
