mod common;

use common::reference_adamw;
use rand::Rng;
use sersynth::model::{AdamW, AdamWConfig, ParamRef};
use sersynth::{seed, Error};

fn run(cfg: AdamWConfig, theta: &mut [f64], grads: &[Vec<f64>]) {
    let mut opt = AdamW::new(cfg);
    for g in grads {
        opt.step(&mut [ParamRef::new("theta", theta, g)]).unwrap();
    }
}

#[test]
fn single_scalar_step() {
    let mut theta = [1.0];
    run(AdamWConfig::default(), &mut theta, &[vec![1.0]]);
    // 1 - 1e-3 * (1 / (1 + 1e-8)) - 1e-3 * 2e-3 * 1
    assert!((theta[0] - 0.998998).abs() < 5e-7, "{}", theta[0]);
    let mut reference = [1.0];
    reference_adamw(&mut reference, &[vec![1.0]], 1e-3, 0.9, 0.999, 1e-8, 2e-3);
    assert_eq!(theta[0], reference[0]);
}

#[test]
fn ten_step_trace_matches_reference() {
    for trial in 0..20 {
        let mut rng = seed::rng_for(99, trial);
        let cfg = AdamWConfig {
            lr: rng.random_range(1e-4..1e-1),
            weight_decay: rng.random_range(0.0..0.1),
            ..AdamWConfig::default()
        };
        let start: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
        let grads: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let mut ours = start.clone();
        run(cfg, &mut ours, &grads);
        let mut theirs = start;
        reference_adamw(
            &mut theirs,
            &grads,
            cfg.lr,
            cfg.beta1,
            cfg.beta2,
            cfg.eps,
            cfg.weight_decay,
        );
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10, "trial {trial}: {a} vs {b}");
        }
    }
}

#[test]
fn zero_gradient_only_decays() {
    let mut theta = [2.0, -4.0];
    run(AdamWConfig::default(), &mut theta, &[vec![0.0, 0.0]]);
    assert_eq!(theta, [2.0 * (1.0 - 2e-6), -4.0 * (1.0 - 2e-6)]);
}

#[test]
fn non_finite_gradient_leaves_parameters_untouched() {
    let mut a = [1.0, 2.0];
    let mut b = [3.0];
    let mut opt = AdamW::new(AdamWConfig::default());
    let err = opt
        .step(&mut [
            ParamRef::new("a", &mut a, &[0.1, 0.2]),
            ParamRef::new("b", &mut b, &[f64::NAN]),
        ])
        .unwrap_err();
    assert!(matches!(err, Error::Numerical { ref param } if param == "b"));
    assert_eq!((a, b), ([1.0, 2.0], [3.0]));
}
