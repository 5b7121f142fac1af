use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 2e-3,
        }
    }
}

/// A named parameter slice with its gradient.
pub struct ParamRef<'a> {
    pub name: &'static str,
    pub value: &'a mut [f64],
    pub grad: &'a [f64],
}

impl<'a> ParamRef<'a> {
    pub fn new(name: &'static str, value: &'a mut [f64], grad: &'a [f64]) -> Self {
        Self { name, value, grad }
    }
}

/// AdamW with decoupled weight decay:
///
/// ```text
/// θ ← θ − lr · m̂ / (√v̂ + ε) − lr · wd · θ
/// ```
///
/// Moments are allocated on the first step and keyed by position in the
/// parameter list, so every call must pass the same groups in the same order.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub config: AdamWConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(config: AdamWConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }

    pub fn step(&mut self, params: &mut [ParamRef<'_>]) -> Result<()> {
        for p in params.iter() {
            if p.value.len() != p.grad.len() {
                return Err(Error::Shape(format!(
                    "`{}` has {} values but {} gradients",
                    p.name,
                    p.value.len(),
                    p.grad.len()
                )));
            }
            if p.grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numerical {
                    param: p.name.to_string(),
                });
            }
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
            self.v = self.m.clone();
        } else if self.m.len() != params.len()
            || self
                .m
                .iter()
                .zip(params.iter())
                .any(|(m, p)| m.len() != p.value.len())
        {
            return Err(Error::Shape(
                "parameter groups changed between AdamW steps".into(),
            ));
        }

        self.step += 1;
        let AdamWConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.value.len() {
                let g = p.grad[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                let theta = p.value[i];
                p.value[i] =
                    theta - lr * (m_hat / (v_hat.sqrt() + eps)) - lr * weight_decay * theta;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_no_decay_is_fixed_point() {
        let mut opt = AdamW::new(AdamWConfig {
            weight_decay: 0.0,
            ..AdamWConfig::default()
        });
        let mut theta = vec![0.3, -1.2];
        for _ in 0..100 {
            opt.step(&mut [ParamRef::new("theta", &mut theta, &[0.0, 0.0])])
                .unwrap();
        }
        assert_eq!(theta, vec![0.3, -1.2]);
        assert_eq!(opt.steps(), 100);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut opt = AdamW::new(AdamWConfig::default());
        let mut a = vec![1.0];
        let mut b = vec![1.0];
        let err = opt
            .step(&mut [
                ParamRef::new("a", &mut a, &[0.5]),
                ParamRef::new("b", &mut b, &[f64::NAN]),
            ])
            .unwrap_err();
        assert!(matches!(err, Error::Numerical { ref param } if param == "b"));
        assert_eq!(a, vec![1.0]);
        assert_eq!(opt.steps(), 0);
    }

    #[test]
    fn second_moment_non_negative() {
        let mut opt = AdamW::new(AdamWConfig::default());
        let mut theta = vec![0.0; 3];
        for k in 0..5 {
            let g = [-(k as f64), 2.0, -0.5];
            opt.step(&mut [ParamRef::new("t", &mut theta, &g)]).unwrap();
        }
        assert!(opt.second_moments()[0].iter().all(|&v| v >= 0.0));
    }
}
