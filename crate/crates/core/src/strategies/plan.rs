use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AdamWConfig, ReprMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Baseline,
    RandomMix,
    Adversarial,
    Transfer,
    Curriculum,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Baseline,
        Strategy::RandomMix,
        Strategy::Adversarial,
        Strategy::Transfer,
        Strategy::Curriculum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::RandomMix => "random_mix",
            Strategy::Adversarial => "adversarial",
            Strategy::Transfer => "transfer",
            Strategy::Curriculum => "curriculum",
        }
    }

    pub fn uses_synthetic(self) -> bool {
        self != Strategy::Baseline
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s || st.as_str().replace('_', "-") == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointPolicy {
    BestVal,
    LastEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainPlan {
    pub strategy: Strategy,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Synthetic : real-train ratio.
    pub ratio: f64,
    pub repr_mode: ReprMode,
    pub hidden: usize,
    pub optimizer: AdamWConfig,
    pub lambda_grl: f64,
    /// Whether synthetic labels enter the emotion loss in adversarial training.
    pub adversarial_synthetic_labels: bool,
    pub transfer_lr_factor: f64,
    /// Phase-1 epochs of transfer learning; `None` uses `epochs`.
    pub transfer_phase1_epochs: Option<usize>,
    pub curriculum_chunks: usize,
    pub curriculum_interval: usize,
    /// Applies to the baseline; synthetic strategies always keep the last epoch.
    pub checkpoint_policy: CheckpointPolicy,
}

impl Default for TrainPlan {
    fn default() -> Self {
        Self {
            strategy: Strategy::Baseline,
            epochs: 50,
            batch_size: 128,
            seed: 0,
            ratio: 0.5,
            repr_mode: ReprMode::LastLayer,
            hidden: 128,
            optimizer: AdamWConfig::default(),
            lambda_grl: 1.0,
            adversarial_synthetic_labels: true,
            transfer_lr_factor: 0.1,
            transfer_phase1_epochs: None,
            curriculum_chunks: 5,
            curriculum_interval: 5,
            checkpoint_policy: CheckpointPolicy::BestVal,
        }
    }
}

impl TrainPlan {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.hidden == 0 {
            return fail("hidden must be at least 1".into());
        }
        if self.strategy.uses_synthetic() && !(self.ratio.is_finite() && self.ratio > 0.0) {
            return fail(format!("ratio must be positive, got {}", self.ratio));
        }
        if !(self.lambda_grl.is_finite() && self.lambda_grl >= 0.0) {
            return fail(format!("lambda_grl must be >= 0, got {}", self.lambda_grl));
        }
        if !(self.transfer_lr_factor.is_finite() && self.transfer_lr_factor > 0.0) {
            return fail("transfer_lr_factor must be positive".into());
        }
        if self.transfer_phase1_epochs == Some(0) {
            return fail("transfer_phase1_epochs must be at least 1".into());
        }
        if self.curriculum_chunks == 0 || self.curriculum_interval == 0 {
            return fail("curriculum_chunks and curriculum_interval must be at least 1".into());
        }
        if self.strategy == Strategy::Curriculum
            && (self.curriculum_chunks - 1) * self.curriculum_interval >= self.epochs
        {
            return fail(format!(
                "curriculum schedule needs (K-1)*interval < epochs: ({}-1)*{} >= {}",
                self.curriculum_chunks, self.curriculum_interval, self.epochs
            ));
        }
        let o = &self.optimizer;
        if !(o.lr > 0.0 && o.eps > 0.0 && o.weight_decay >= 0.0)
            || !(0.0..1.0).contains(&o.beta1)
            || !(0.0..1.0).contains(&o.beta2)
        {
            return fail(format!("invalid optimizer settings {o:?}"));
        }
        Ok(())
    }

    pub fn effective_policy(&self) -> CheckpointPolicy {
        match self.strategy {
            Strategy::Baseline => self.checkpoint_policy,
            _ => CheckpointPolicy::LastEpoch,
        }
    }
}

/// Synthetic ratio actually used by a plan (0 for the baseline).
pub fn effective_ratio(plan: &TrainPlan) -> f64 {
    if plan.strategy.uses_synthetic() {
        plan.ratio
    } else {
        0.0
    }
}
