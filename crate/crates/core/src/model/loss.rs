/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|v| v / sum).collect()
}

/// `-log softmax(logits)[label]` and its gradient `softmax(logits) - onehot(label)`.
pub fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    assert!(label < logits.len(), "label {label} out of range");
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    let loss = log_sum - logits[label];
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    (loss, grad)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Binary cross-entropy on a logit: `softplus(z) - y·z`, gradient `sigmoid(z) - y`.
pub fn bce_logit(logit: f64, target: f64) -> (f64, f64) {
    (softplus(logit) - target * logit, sigmoid(logit) - target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits() {
        for label in 0..4 {
            let (loss, _) = cross_entropy(&[0.0; 4], label);
            assert_abs_diff_eq!(loss, 4f64.ln(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(4f64.ln(), 1.386294, epsilon = 1e-6);
    }

    #[test]
    fn large_logit_is_stable() {
        let (loss, grad) = cross_entropy(&[1000.0, 0.0, 0.0, 0.0], 0);
        assert!(loss.is_finite() && loss.abs() < 1e-12);
        assert!(grad.iter().all(|g| g.is_finite()));
        let (loss, _) = cross_entropy(&[1000.0, 0.0, 0.0, 0.0], 1);
        assert_abs_diff_eq!(loss, 1000.0, epsilon = 1e-9);
    }

    #[test]
    fn bce_cases() {
        let (loss, grad) = bce_logit(0.0, 1.0);
        assert_abs_diff_eq!(loss, 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(grad, -0.5);
        assert_abs_diff_eq!(bce_logit(0.0, 0.0).1, 0.5);
        let (loss, _) = bce_logit(-800.0, 0.0);
        assert!((0.0..1e-300).contains(&loss));
        let (loss, grad) = bce_logit(800.0, 0.0);
        assert_abs_diff_eq!(loss, 800.0);
        assert_abs_diff_eq!(grad, 1.0);
    }

    proptest! {
        #[test]
        fn ce_gradient_sums_to_zero(z in proptest::collection::vec(-50.0f64..50.0, 2..8), pick in 0usize..8) {
            let label = pick % z.len();
            let (_, g) = cross_entropy(&z, label);
            prop_assert!(g.iter().sum::<f64>().abs() < 1e-12);
        }

        #[test]
        fn bce_gradient_bounded(z in -30.0f64..30.0, y in 0u8..2) {
            let (_, g) = bce_logit(z, f64::from(y));
            prop_assert!(g > -1.0 && g < 1.0);
        }
    }
}
