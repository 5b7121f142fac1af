mod common;

use common::{
    instance_rng, rel_err, small_instance, smooth_instances, worst_gradient_error, FD_TOL,
};
use sersynth::model::{fuse_layers, grad_reverse, ReprMode};

#[test]
fn weighted_layers_gradients_match_finite_differences() {
    let (instances, draws) = smooth_instances(100, ReprMode::WeightedLayers, 0);
    assert!(draws < 150, "too many instances near a ReLU kink: {draws}");
    for (i, inst) in instances.iter().enumerate() {
        let worst = worst_gradient_error(inst, 0.7);
        assert!(worst < FD_TOL, "instance {i}: relative error {worst:e}");
    }
}

#[test]
fn last_layer_gradients_match_finite_differences() {
    for (i, inst) in smooth_instances(50, ReprMode::LastLayer, 1000)
        .0
        .iter()
        .enumerate()
    {
        let worst = worst_gradient_error(inst, 1.0);
        assert!(worst < FD_TOL, "instance {i}: relative error {worst:e}");
    }
}

#[test]
fn reversal_is_identity_forward_and_negation_backward() {
    let g = [0.5, -2.0, 0.0];
    assert_eq!(grad_reverse(&g, 2.0), vec![-1.0, 4.0, -0.0]);
    assert_eq!(grad_reverse(&g, 0.0), vec![-0.0, 0.0, -0.0]);
}

#[test]
fn equal_fusion_logits_average_layers() {
    let inst = small_instance(&mut instance_rng(7), ReprMode::WeightedLayers);
    let fused = fuse_layers(&inst.x, &[0.0, 0.0, 0.0]).unwrap();
    for t in 0..inst.x.frames() {
        for d in 0..inst.x.dims() {
            let mean = (0..3)
                .map(|l| f64::from(inst.x.frame(l, t)[d]))
                .sum::<f64>()
                / 3.0;
            assert!(rel_err(fused[t * 6 + d], mean) < 1e-12);
        }
    }
}
