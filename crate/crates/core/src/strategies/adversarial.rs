//! Three-step domain-adversarial training. Per batch:
//!
//! 1. emotion cross-entropy, update fuser + SER head;
//! 2. domain BCE, update the domain head only (fuser gradient discarded);
//! 3. domain BCE again, gradient reversed into the fuser, update the fuser only.
//!
//! Each step owns its AdamW state.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::trainer::{check_inputs, emotion_step, model_dims, FoldRng, Tracker};
use super::{FoldData, TrainOutcome, TrainPlan};
use crate::corpus::{Domain, Utterance};
use crate::error::{Error, Result};
use crate::model::{bce_logit, AdamW, DomainGrads, DomainHead, FuserGrads, SerModel};

/// Step 1. Uses synthetic labels only if `synthetic_labels` is set. Returns
/// the summed loss and the number of labeled items.
pub fn step_emotion(
    model: &mut SerModel,
    opt: &mut AdamW,
    batch: &[&Utterance],
    synthetic_labels: bool,
) -> Result<(f64, usize)> {
    let labeled: Vec<&Utterance> = batch
        .iter()
        .filter(|u| synthetic_labels || u.record.domain == Domain::Real)
        .copied()
        .collect();
    if labeled.is_empty() {
        return Ok((0.0, 0));
    }
    Ok((emotion_step(model, opt, &labeled)?, labeled.len()))
}

fn has_both_domains(batch: &[&Utterance]) -> bool {
    batch.iter().any(|u| u.record.domain == Domain::Real)
        && batch.iter().any(|u| u.record.domain == Domain::Synthetic)
}

/// Step 2. Mean domain-BCE gradient applied to the head; the model is only
/// read. Returns the applied gradient.
pub fn step_domain(
    model: &SerModel,
    head: &mut DomainHead,
    opt: &mut AdamW,
    batch: &[&Utterance],
) -> Result<DomainGrads> {
    let mut grads = DomainGrads::zeros_like(head);
    for u in batch {
        let trace = model.forward(&u.features)?;
        let dtrace = head.forward(&trace.embedding)?;
        let (_, dlogit) = bce_logit(dtrace.logit, u.record.domain.target());
        grads.add_assign(&head.backward(&dtrace, dlogit).0);
    }
    grads.scale(1.0 / batch.len() as f64);
    head.apply(opt, &grads)?;
    Ok(grads)
}

/// Gradients of step 3.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversalGrads {
    /// Mean domain-loss gradient w.r.t. the fuser, before reversal.
    pub unreversed: FuserGrads,
    /// `-λ · unreversed`, the gradient handed to the optimizer.
    pub applied: FuserGrads,
}

/// Mean domain-loss gradient with respect to the fuser parameters, no reversal.
pub fn domain_fuser_gradient(
    model: &SerModel,
    head: &DomainHead,
    batch: &[&Utterance],
) -> Result<FuserGrads> {
    let mut grads = FuserGrads::zeros_like(model);
    for u in batch {
        let trace = model.forward(&u.features)?;
        let dtrace = head.forward(&trace.embedding)?;
        let (_, dlogit) = bce_logit(dtrace.logit, u.record.domain.target());
        let (_, de) = head.backward(&dtrace, dlogit);
        grads.add_assign(&model.backward_embedding(&trace, &de)?);
    }
    grads.scale(1.0 / batch.len() as f64);
    Ok(grads)
}

/// Step 3. The reversal layer sits between the pooled embedding and the
/// domain head; since the fuser backward pass is linear in the incoming
/// gradient, the `-λ` factor is applied to the accumulated fuser gradient.
/// The domain head is only read.
pub fn step_reversal(
    model: &mut SerModel,
    head: &DomainHead,
    opt: &mut AdamW,
    batch: &[&Utterance],
    lambda: f64,
) -> Result<ReversalGrads> {
    let unreversed = domain_fuser_gradient(model, head, batch)?;
    let applied = unreversed.reversed(lambda);
    model.apply_fuser(opt, &applied)?;
    Ok(ReversalGrads {
        unreversed,
        applied,
    })
}

/// Batches that mix the two domains in proportion to their sizes: both lists
/// are shuffled, then spread evenly over `ceil(n / batch_size)` batches.
pub fn adversarial_batches<'a>(
    real: &[&'a Utterance],
    synthetic: &[&'a Utterance],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<&'a Utterance>> {
    let mut real = real.to_vec();
    let mut synthetic = synthetic.to_vec();
    real.shuffle(rng);
    synthetic.shuffle(rng);
    let total = real.len() + synthetic.len();
    let n_batches = total.div_ceil(batch_size.max(1)).max(1);
    let span = |len: usize, b: usize| (b * len / n_batches)..((b + 1) * len / n_batches);
    (0..n_batches)
        .map(|b| {
            real[span(real.len(), b)]
                .iter()
                .chain(&synthetic[span(synthetic.len(), b)])
                .copied()
                .collect()
        })
        .filter(|batch: &Vec<&Utterance>| !batch.is_empty())
        .collect()
}

pub fn train_adversarial(
    fold: &FoldData<'_>,
    synthetic: &[&Utterance],
    plan: &TrainPlan,
) -> Result<TrainOutcome> {
    check_inputs(fold, plan)?;
    if synthetic.is_empty() {
        return Err(Error::Validation(
            "adversarial training needs synthetic data".into(),
        ));
    }
    let mut rngs = FoldRng::new(fold.seed);
    let mut model = SerModel::new(model_dims(fold, plan)?, plan.repr_mode, &mut rngs.init);
    let mut head = DomainHead::new(plan.hidden, &mut rngs.init);
    let mut opt_emotion = AdamW::new(plan.optimizer);
    let mut opt_domain = AdamW::new(plan.optimizer);
    let mut opt_reversal = AdamW::new(plan.optimizer);
    let mut tracker = Tracker::new(fold, plan);

    for _ in 0..plan.epochs {
        let mut loss_sum = 0.0;
        let mut labeled = 0;
        let mut skipped = 0;
        for batch in adversarial_batches(&fold.train, synthetic, plan.batch_size, &mut rngs.shuffle)
        {
            let (loss, n) = step_emotion(
                &mut model,
                &mut opt_emotion,
                &batch,
                plan.adversarial_synthetic_labels,
            )?;
            loss_sum += loss;
            labeled += n;
            if !has_both_domains(&batch) {
                skipped += 1;
                continue;
            }
            step_domain(&model, &mut head, &mut opt_domain, &batch)?;
            step_reversal(
                &mut model,
                &head,
                &mut opt_reversal,
                &batch,
                plan.lambda_grl,
            )?;
        }
        if skipped > 0 {
            log::debug!(
                "fold {} epoch {}: {skipped} single-domain batches skipped steps 2-3",
                fold.fold_index,
                tracker.epochs_done() + 1
            );
        }
        tracker.end_epoch(
            &model,
            Some(&head),
            loss_sum / labeled.max(1) as f64,
            synthetic.len(),
        )?;
    }
    tracker.finish(model, Some(head))
}
