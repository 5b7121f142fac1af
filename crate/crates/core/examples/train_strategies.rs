//! Trains every strategy on the in-memory blob corpus and prints fold-mean
//! WA/UA.
//!
//! ```text
//! cargo run --release --example train_strategies -- [epochs]
//! ```

use sersynth::corpus::{generate_blob, BlobConfig, Corpus};
use sersynth::metrics::aggregate_folds;
use sersynth::strategies::{run_experiment, Strategy, TrainPlan};

fn main() -> sersynth::Result<()> {
    let epochs = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(50);
    let corpus = Corpus::from_utterances(generate_blob(&BlobConfig::default())?)?;
    println!("strategy      mean_wa  mean_ua");
    for strategy in Strategy::ALL {
        let plan = TrainPlan {
            strategy,
            epochs,
            batch_size: 16,
            seed: 42,
            ..TrainPlan::default()
        };
        let start = std::time::Instant::now();
        let runs = run_experiment(&corpus, &plan, 1)?;
        let results: Vec<_> = runs.into_iter().map(|r| r.result).collect();
        let agg = aggregate_folds(&results, results.len())?;
        println!(
            "{:<12}  {:.4}   {:.4}   ({:.1?})",
            strategy.as_str(),
            agg.mean_wa,
            agg.mean_ua,
            start.elapsed()
        );
    }
    Ok(())
}
