//! Compares backpropagated gradients of a tiny classifier with central finite
//! differences.
//!
//! ```text
//! cargo run --example gradient_check
//! ```

use rand::Rng;
use sersynth::corpus::FeatureTensor;
use sersynth::model::{cross_entropy, ModelDims, ReprMode, SerModel};
use sersynth::seed;

fn loss(model: &SerModel, x: &FeatureTensor, label: usize) -> f64 {
    cross_entropy(&model.logits(x).unwrap(), label).0
}

fn main() -> sersynth::Result<()> {
    let mut rng = seed::rng(3);
    let dims = ModelDims {
        layers: 3,
        dims: 6,
        hidden: 4,
        classes: 3,
    };
    let mut model = SerModel::new(dims, ReprMode::WeightedLayers, &mut rng);
    let data = (0..3 * 5 * 6)
        .map(|_| rng.random_range(-1.0f32..1.0))
        .collect();
    let x = FeatureTensor::new(3, 5, 6, data)?;
    let label = 1;

    let trace = model.forward(&x)?;
    let (_, dlogits) = cross_entropy(&trace.logits, label);
    let grads = model.backward(&trace, &dlogits)?;
    let analytic = [
        grads.fuser.fusion.clone().unwrap_or_default(),
        grads.fuser.w1.clone(),
        grads.fuser.b1.clone(),
        grads.w2.clone(),
        grads.b2.clone(),
    ];

    let eps = 1e-5;
    for (g, expected) in analytic.iter().enumerate() {
        let name = model.param_groups()[g].0;
        let mut worst = 0.0f64;
        for (i, &want) in expected.iter().enumerate() {
            let orig = model.param_groups()[g].1[i];
            model.param_groups_mut()[g].1[i] = orig + eps;
            let up = loss(&model, &x, label);
            model.param_groups_mut()[g].1[i] = orig - eps;
            let down = loss(&model, &x, label);
            model.param_groups_mut()[g].1[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            worst = worst.max((numeric - want).abs() / numeric.abs().max(want.abs()).max(1e-6));
        }
        println!(
            "{name:<13} {:>3} params  worst rel err {worst:.2e}",
            expected.len()
        );
    }
    Ok(())
}
