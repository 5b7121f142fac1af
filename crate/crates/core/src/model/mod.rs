//! Downstream SER classifier with hand-derived backpropagation.
//!
//! ```text
//! fused_t = Σ_l softmax(fusion_logits)_l · x[l, t]      (weighted-layers mode)
//! h_t     = ReLU(W1 · fused_t + b1)
//! e       = mean_t h_t
//! logits  = W2 · e + b2
//! ```
//!
//! A small domain head (`H → 64 → 1`) reads `e` for adversarial training.
//! All arithmetic is `f64`; features are stored as `f32`.

mod adamw;
mod checkpoint;
mod domain;
mod loss;
mod ser;

pub use adamw::{AdamW, AdamWConfig, ParamRef};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint,
    CheckpointMeta,
};
pub use domain::{DomainGrads, DomainHead, DomainTrace, DOMAIN_HIDDEN};
pub use loss::{bce_logit, cross_entropy, sigmoid, softmax};
pub use ser::{
    fuse_layers, grad_reverse, ForwardTrace, FuserGrads, ModelDims, ReprMode, SerGrads, SerModel,
};

use rand::Rng;

/// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` initialization.
pub(crate) fn init_uniform(rng: &mut impl Rng, n: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}

pub(crate) fn axpy(acc: &mut [f64], scale: f64, x: &[f64]) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += scale * v;
    }
}
