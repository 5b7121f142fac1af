//! Sweeps the synthetic-to-real ratio for one strategy and prints the CSV.
//!
//! ```text
//! cargo run --release --example ratio_sweep -- [strategy] [epochs]
//! ```

use sersynth::corpus::{generate_blob, BlobConfig, Corpus};
use sersynth::metrics::ratio_sweep;
use sersynth::strategies::{Strategy, TrainPlan};

fn main() -> sersynth::Result<()> {
    let mut args = std::env::args().skip(1);
    let strategy: Strategy = args.next().as_deref().unwrap_or("random_mix").parse()?;
    let epochs = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let corpus = Corpus::from_utterances(generate_blob(&BlobConfig::default())?)?;
    let plan = TrainPlan {
        strategy,
        epochs,
        batch_size: 16,
        seed: 42,
        curriculum_interval: (epochs / 10).max(1),
        ..TrainPlan::default()
    };
    let table = ratio_sweep(&corpus, &plan, &[0.0, 0.25, 0.5, 1.0], 4)?;
    print!("{}", table.to_csv());
    Ok(())
}
