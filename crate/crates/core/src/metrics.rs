//! WA/UA, confusion matrices, fold aggregation and the synthetic-ratio sweep.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::strategies::{effective_ratio, run_experiment, Strategy, TrainPlan};

/// Rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_rows(counts: Vec<Vec<u64>>) -> Result<Self> {
        let classes = counts.len();
        if classes == 0 || counts.iter().any(|r| r.len() != classes) {
            return Err(Error::Validation(
                "confusion matrix must be square and non-empty".into(),
            ));
        }
        Ok(Self { classes, counts })
    }

    pub fn from_predictions(classes: usize, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Validation(
                "truth and prediction lengths differ".into(),
            ));
        }
        let mut m = Self::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            m.record(t, p)?;
        }
        Ok(m)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        if truth >= self.classes || predicted >= self.classes {
            return Err(Error::Validation(format!(
                "class index out of range: ({truth}, {predicted}) with {} classes",
                self.classes
            )));
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|k| self.counts[k][k]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaUa {
    pub wa: f64,
    pub ua: f64,
    /// Some class had no utterances and was left out of the UA mean.
    pub empty_classes: bool,
}

/// WA = overall accuracy; UA = mean recall over classes that occur.
pub fn wa_ua(confusion: &ConfusionMatrix) -> Result<WaUa> {
    let total = confusion.total();
    if total == 0 {
        return Err(Error::Validation("confusion matrix is empty".into()));
    }
    let wa = confusion.trace() as f64 / total as f64;
    let recalls: Vec<f64> = confusion
        .counts
        .iter()
        .enumerate()
        .filter_map(|(k, row)| {
            let n: u64 = row.iter().sum();
            (n > 0).then(|| row[k] as f64 / n as f64)
        })
        .collect();
    let ua = recalls.iter().sum::<f64>() / recalls.len() as f64;
    Ok(WaUa {
        wa,
        ua,
        empty_classes: recalls.len() < confusion.classes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: u8,
    pub wa: f64,
    pub ua: f64,
    pub confusion: ConfusionMatrix,
}

impl FoldResult {
    pub fn from_confusion(fold: u8, confusion: ConfusionMatrix) -> Result<Self> {
        let WaUa { wa, ua, .. } = wa_ua(&confusion)?;
        Ok(Self {
            fold,
            wa,
            ua,
            confusion,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_wa: f64,
    pub mean_ua: f64,
    /// Sorted by fold index.
    pub folds: Vec<FoldResult>,
}

/// Unweighted mean over folds. Requires exactly folds `1..=expected_folds`.
pub fn aggregate_folds(results: &[FoldResult], expected_folds: usize) -> Result<Aggregate> {
    let mut folds = results.to_vec();
    folds.sort_by_key(|r| r.fold);
    let indices: Vec<usize> = folds.iter().map(|r| r.fold as usize).collect();
    if indices != (1..=expected_folds).collect::<Vec<_>>() {
        return Err(Error::Validation(format!(
            "expected folds 1..={expected_folds}, got {indices:?}"
        )));
    }
    let n = folds.len() as f64;
    Ok(Aggregate {
        mean_wa: folds.iter().map(|r| r.wa).sum::<f64>() / n,
        mean_ua: folds.iter().map(|r| r.ua).sum::<f64>() / n,
        folds,
    })
}

pub const RESULTS_HEADER: &str = "ratio,fold,wa,ua";

/// Per-fold rows followed by a `mean` row, without the header.
pub fn results_rows(ratio: f64, agg: &Aggregate) -> String {
    let mut out = String::new();
    for r in &agg.folds {
        writeln!(out, "{ratio},{},{:.6},{:.6}", r.fold, r.wa, r.ua).expect("write to String");
    }
    writeln!(out, "{ratio},mean,{:.6},{:.6}", agg.mean_wa, agg.mean_ua).expect("write to String");
    out
}

pub fn results_csv(ratio: f64, agg: &Aggregate) -> String {
    format!("{RESULTS_HEADER}\n{}", results_rows(ratio, agg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub ratio: f64,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{RESULTS_HEADER}\n");
        for row in &self.rows {
            out.push_str(&results_rows(row.ratio, &row.aggregate));
        }
        out
    }
}

/// Plan with its strategy/ratio replaced for one sweep point; ratio 0 is the
/// baseline.
pub fn sweep_plan(plan: &TrainPlan, ratio: f64) -> TrainPlan {
    let mut p = plan.clone();
    if ratio == 0.0 {
        p.strategy = Strategy::Baseline;
    } else {
        p.ratio = ratio;
    }
    p
}

/// Sweep ratios must be non-empty, finite, non-negative and strictly ascending.
pub fn validate_ratios(ratios: &[f64]) -> Result<()> {
    if ratios.is_empty() {
        return Err(Error::Config("no ratios given".into()));
    }
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::Config(format!(
            "ratios must be finite and >= 0, got {ratios:?}"
        )));
    }
    if ratios.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "ratios must be strictly ascending, got {ratios:?}"
        )));
    }
    Ok(())
}

/// Runs the plan's strategy once per ratio over all folds.
pub fn ratio_sweep(
    corpus: &Corpus,
    plan: &TrainPlan,
    ratios: &[f64],
    jobs: usize,
) -> Result<SweepTable> {
    validate_ratios(ratios)?;
    let rows = ratios
        .iter()
        .map(|&ratio| {
            let p = sweep_plan(plan, ratio);
            let runs = run_experiment(corpus, &p, jobs)?;
            let results: Vec<FoldResult> = runs.into_iter().map(|r| r.result).collect();
            Ok(SweepRow {
                ratio: effective_ratio(&p),
                aggregate: aggregate_folds(&results, results.len())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}
