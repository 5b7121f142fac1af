//! Writes a Gaussian-blob feature corpus to disk, reloads it through its
//! manifest and prints the leave-one-session-out folds.
//!
//! ```text
//! cargo run --example blob_corpus -- [out_dir]
//! ```

use std::path::PathBuf;

use sersynth::corpus::{generate_blob_corpus, make_folds, read_features, BlobConfig, Corpus};

fn main() -> sersynth::Result<()> {
    let tmp;
    let out = match std::env::args().nth(1) {
        Some(dir) => PathBuf::from(dir),
        None => {
            tmp = tempfile::tempdir().map_err(|e| sersynth::Error::io("tempdir", e))?;
            tmp.path().to_path_buf()
        }
    };
    let (records, manifest) = generate_blob_corpus(&BlobConfig::default(), &out)?;
    println!(
        "{} records, manifest at {}",
        records.len(),
        manifest.display()
    );

    let corpus = Corpus::load(&manifest)?;
    let (layers, dims) = corpus.feature_shape().expect("non-empty corpus");
    println!(
        "real {}, synthetic {}, {layers} layers x {dims} dims",
        corpus.real.len(),
        corpus.synthetic.len()
    );

    let first = &records[0];
    let t = read_features(&out.join(&first.feature_path))?;
    println!(
        "{}: {} frames, {:.2} s, label {}",
        first.id,
        t.frames(),
        first.duration_s,
        first.label.as_str()
    );

    for fold in make_folds(&records, 42)? {
        println!(
            "fold {}: train {:>3}  val {:>3}  test {:>3}",
            fold.fold_index,
            fold.train_ids.len(),
            fold.val_ids.len(),
            fold.test_ids.len()
        );
    }
    Ok(())
}
