//! Training regimes: baseline, random mixing, three-step adversarial,
//! transfer and curriculum, plus checkpoint selection and the per-fold
//! experiment runner.

mod adversarial;
mod curriculum;
mod experiment;
mod plan;
mod trainer;

pub use adversarial::{
    adversarial_batches, domain_fuser_gradient, step_domain, step_emotion, step_reversal,
    train_adversarial, ReversalGrads,
};
pub use curriculum::{active_count, curriculum_chunks, train_curriculum};
pub use experiment::{evaluate_fold, prepare_fold, run_experiment, run_fold, FoldData, FoldRun};
pub use plan::{effective_ratio, CheckpointPolicy, Strategy, TrainPlan};
pub use trainer::{
    evaluate, select_checkpoint, train_baseline, train_random_mix, train_transfer, EpochLog,
    TrainOutcome,
};
