use rand::Rng;

use super::{axpy, init_uniform, AdamW, ParamRef};
use crate::error::{Error, Result};

pub const DOMAIN_HIDDEN: usize = 64;

/// Domain classifier on the pooled embedding: `H → 64 → ReLU → 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainHead {
    pub input: usize,
    /// `64 × input`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DomainTrace {
    pub embedding: Vec<f64>,
    pub pre: Vec<f64>,
    pub logit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl DomainGrads {
    pub fn zeros_like(head: &DomainHead) -> Self {
        Self {
            w1: vec![0.0; head.w1.len()],
            b1: vec![0.0; head.b1.len()],
            w2: vec![0.0; head.w2.len()],
            b2: vec![0.0; 1],
        }
    }

    pub fn add_assign(&mut self, other: &DomainGrads) {
        axpy(&mut self.w1, 1.0, &other.w1);
        axpy(&mut self.b1, 1.0, &other.b1);
        axpy(&mut self.w2, 1.0, &other.w2);
        axpy(&mut self.b2, 1.0, &other.b2);
    }

    pub fn scale(&mut self, s: f64) {
        for v in self
            .w1
            .iter_mut()
            .chain(&mut self.b1)
            .chain(&mut self.w2)
            .chain(&mut self.b2)
        {
            *v *= s;
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }
}

impl DomainHead {
    pub fn new(input: usize, rng: &mut impl Rng) -> Self {
        Self {
            input,
            w1: init_uniform(rng, DOMAIN_HIDDEN * input, input),
            b1: init_uniform(rng, DOMAIN_HIDDEN, input),
            w2: init_uniform(rng, DOMAIN_HIDDEN, DOMAIN_HIDDEN),
            b2: init_uniform(rng, 1, DOMAIN_HIDDEN),
        }
    }

    pub fn forward(&self, embedding: &[f64]) -> Result<DomainTrace> {
        if embedding.len() != self.input {
            return Err(Error::Shape(format!(
                "domain head expects {} inputs, got {}",
                self.input,
                embedding.len()
            )));
        }
        let h = self.input;
        let pre: Vec<f64> = (0..DOMAIN_HIDDEN)
            .map(|j| {
                self.b1[j]
                    + self.w1[j * h..(j + 1) * h]
                        .iter()
                        .zip(embedding)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect();
        let logit = self.b2[0]
            + self
                .w2
                .iter()
                .zip(&pre)
                .map(|(w, z)| w * z.max(0.0))
                .sum::<f64>();
        Ok(DomainTrace {
            embedding: embedding.to_vec(),
            pre,
            logit,
        })
    }

    /// Returns head gradients and `dL/d embedding`.
    pub fn backward(&self, trace: &DomainTrace, dlogit: f64) -> (DomainGrads, Vec<f64>) {
        let h = self.input;
        let mut grads = DomainGrads::zeros_like(self);
        let mut de = vec![0.0; h];
        grads.b2[0] = dlogit;
        for j in 0..DOMAIN_HIDDEN {
            let z = trace.pre[j];
            grads.w2[j] = dlogit * z.max(0.0);
            if z <= 0.0 {
                continue;
            }
            let dz = dlogit * self.w2[j];
            grads.b1[j] = dz;
            axpy(&mut grads.w1[j * h..(j + 1) * h], dz, &trace.embedding);
            axpy(&mut de, dz, &self.w1[j * h..(j + 1) * h]);
        }
        (grads, de)
    }

    pub fn apply(&mut self, opt: &mut AdamW, g: &DomainGrads) -> Result<()> {
        opt.step(&mut [
            ParamRef::new("domain_w1", &mut self.w1, &g.w1),
            ParamRef::new("domain_b1", &mut self.b1, &g.b1),
            ParamRef::new("domain_w2", &mut self.w2, &g.w2),
            ParamRef::new("domain_b2", &mut self.b2, &g.b2),
        ])
    }

    pub fn snapshot(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }

    pub fn param_groups(&self) -> [(&'static str, &Vec<f64>); 4] {
        [
            ("domain_w1", &self.w1),
            ("domain_b1", &self.b1),
            ("domain_w2", &self.w2),
            ("domain_b2", &self.b2),
        ]
    }

    pub fn param_groups_mut(&mut self) -> [(&'static str, &mut Vec<f64>); 4] {
        [
            ("domain_w1", &mut self.w1),
            ("domain_b1", &mut self.b1),
            ("domain_w2", &mut self.w2),
            ("domain_b2", &mut self.b2),
        ]
    }
}
