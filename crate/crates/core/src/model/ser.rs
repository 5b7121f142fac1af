use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{axpy, init_uniform, softmax, AdamW, ParamRef};
use crate::corpus::FeatureTensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReprMode {
    /// Use only the last layer of the input; no fusion parameters.
    LastLayer,
    /// Learnable softmax-weighted sum over all layers.
    WeightedLayers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub layers: usize,
    pub dims: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            layers: 13,
            dims: 768,
            hidden: 128,
            classes: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerModel {
    pub mode: ReprMode,
    pub dims: ModelDims,
    /// Length `layers` in weighted mode, empty in last-layer mode.
    pub fusion_logits: Vec<f64>,
    /// `hidden × dims`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `classes × hidden`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradients of the feature fuser: fusion logits, `W1`, `b1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuserGrads {
    pub fusion: Option<Vec<f64>>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerGrads {
    pub fuser: FuserGrads,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Intermediates of one forward pass, borrowed input included.
#[derive(Debug, Clone)]
pub struct ForwardTrace<'a> {
    pub input: &'a FeatureTensor,
    /// Effective fusion weights (`[1.0]` in last-layer mode).
    pub weights: Vec<f64>,
    /// `frames × dims`.
    pub fused: Vec<f64>,
    /// `frames × hidden`, before ReLU.
    pub pre: Vec<f64>,
    /// Mean-pooled hidden vector.
    pub embedding: Vec<f64>,
    pub logits: Vec<f64>,
}

impl ForwardTrace<'_> {
    pub fn frames(&self) -> usize {
        self.input.frames()
    }
}

/// `output[t, d] = Σ_l softmax(fusion_logits)[l] · x[l, t, d]`.
pub fn fuse_layers(x: &FeatureTensor, fusion_logits: &[f64]) -> Result<Vec<f64>> {
    if x.layers() != fusion_logits.len() {
        return Err(Error::Shape(format!(
            "input has {} layers but {} fusion logits",
            x.layers(),
            fusion_logits.len()
        )));
    }
    Ok(fuse_with_weights(x, &softmax(fusion_logits)))
}

fn fuse_with_weights(x: &FeatureTensor, weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.frames() * x.dims()];
    for (l, &w) in weights.iter().enumerate() {
        for (o, &v) in out.iter_mut().zip(x.layer(l)) {
            *o += w * f64::from(v);
        }
    }
    out
}

/// Gradient reversal backward: `-λ · g`. The forward direction is the identity.
pub fn grad_reverse(g: &[f64], lambda: f64) -> Vec<f64> {
    g.iter().map(|v| -lambda * v).collect()
}

impl FuserGrads {
    pub fn zeros_like(model: &SerModel) -> Self {
        Self {
            fusion: match model.mode {
                ReprMode::WeightedLayers => Some(vec![0.0; model.fusion_logits.len()]),
                ReprMode::LastLayer => None,
            },
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
        }
    }

    fn groups(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.fusion.iter().chain([&self.w1, &self.b1])
    }

    fn groups_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.fusion.iter_mut().chain([&mut self.w1, &mut self.b1])
    }

    pub fn add_assign(&mut self, other: &FuserGrads) {
        for (a, b) in self.groups_mut().zip(other.groups()) {
            axpy(a, 1.0, b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.groups_mut().flatten().for_each(|v| *v *= s);
    }

    /// Elementwise `-λ ·` on every group.
    pub fn reversed(&self, lambda: f64) -> FuserGrads {
        FuserGrads {
            fusion: self.fusion.as_ref().map(|g| grad_reverse(g, lambda)),
            w1: grad_reverse(&self.w1, lambda),
            b1: grad_reverse(&self.b1, lambda),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.groups().flatten().copied().collect()
    }
}

impl SerGrads {
    pub fn zeros_like(model: &SerModel) -> Self {
        Self {
            fuser: FuserGrads::zeros_like(model),
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
        }
    }

    pub fn add_assign(&mut self, other: &SerGrads) {
        self.fuser.add_assign(&other.fuser);
        axpy(&mut self.w2, 1.0, &other.w2);
        axpy(&mut self.b2, 1.0, &other.b2);
    }

    pub fn scale(&mut self, s: f64) {
        self.fuser.scale(s);
        self.w2
            .iter_mut()
            .chain(self.b2.iter_mut())
            .for_each(|v| *v *= s);
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.fuser.flatten();
        out.extend_from_slice(&self.w2);
        out.extend_from_slice(&self.b2);
        out
    }
}

fn fuser_refs<'a>(
    mode: ReprMode,
    fusion_logits: &'a mut [f64],
    w1: &'a mut [f64],
    b1: &'a mut [f64],
    g: &'a FuserGrads,
) -> Vec<ParamRef<'a>> {
    let mut params = Vec::with_capacity(5);
    if let (ReprMode::WeightedLayers, Some(gf)) = (mode, &g.fusion) {
        params.push(ParamRef::new("fusion_logits", fusion_logits, gf));
    }
    params.push(ParamRef::new("w1", w1, &g.w1));
    params.push(ParamRef::new("b1", b1, &g.b1));
    params
}

impl SerModel {
    /// Random linear layers, fusion logits at zero (uniform `1/L` weights).
    pub fn new(dims: ModelDims, mode: ReprMode, rng: &mut impl Rng) -> Self {
        let ModelDims {
            layers,
            dims: d,
            hidden: h,
            classes: c,
        } = dims;
        let w1 = init_uniform(rng, h * d, d);
        let b1 = init_uniform(rng, h, d);
        let w2 = init_uniform(rng, c * h, h);
        let b2 = init_uniform(rng, c, h);
        Self {
            mode,
            dims,
            fusion_logits: match mode {
                ReprMode::WeightedLayers => vec![0.0; layers],
                ReprMode::LastLayer => Vec::new(),
            },
            w1,
            b1,
            w2,
            b2,
        }
    }

    pub fn fusion_weights(&self) -> Vec<f64> {
        match self.mode {
            ReprMode::WeightedLayers => softmax(&self.fusion_logits),
            ReprMode::LastLayer => vec![1.0],
        }
    }

    fn check_input(&self, x: &FeatureTensor) -> Result<()> {
        if x.dims() != self.dims.dims {
            return Err(Error::Shape(format!(
                "input has {} dims, model expects {}",
                x.dims(),
                self.dims.dims
            )));
        }
        if self.mode == ReprMode::WeightedLayers && x.layers() != self.fusion_logits.len() {
            return Err(Error::Shape(format!(
                "input has {} layers, model fuses {}",
                x.layers(),
                self.fusion_logits.len()
            )));
        }
        Ok(())
    }

    fn fuse(&self, x: &FeatureTensor) -> (Vec<f64>, Vec<f64>) {
        match self.mode {
            ReprMode::WeightedLayers => {
                let w = softmax(&self.fusion_logits);
                (fuse_with_weights(x, &w), w)
            }
            ReprMode::LastLayer => (
                x.layer(x.layers() - 1)
                    .iter()
                    .map(|&v| f64::from(v))
                    .collect(),
                vec![1.0],
            ),
        }
    }

    pub fn forward<'a>(&self, x: &'a FeatureTensor) -> Result<ForwardTrace<'a>> {
        self.check_input(x)?;
        let (d, h, c) = (self.dims.dims, self.dims.hidden, self.dims.classes);
        let t_len = x.frames();
        let (fused, weights) = self.fuse(x);

        let mut pre = vec![0.0; t_len * h];
        let mut embedding = vec![0.0; h];
        for t in 0..t_len {
            let frame = &fused[t * d..(t + 1) * d];
            for j in 0..h {
                let row = &self.w1[j * d..(j + 1) * d];
                let z = self.b1[j] + row.iter().zip(frame).map(|(w, v)| w * v).sum::<f64>();
                pre[t * h + j] = z;
                embedding[j] += z.max(0.0);
            }
        }
        let inv_t = 1.0 / t_len as f64;
        embedding.iter_mut().for_each(|v| *v *= inv_t);

        let logits = (0..c)
            .map(|k| {
                let row = &self.w2[k * h..(k + 1) * h];
                self.b2[k] + row.iter().zip(&embedding).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        Ok(ForwardTrace {
            input: x,
            weights,
            fused,
            pre,
            embedding,
            logits,
        })
    }

    pub fn logits(&self, x: &FeatureTensor) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.logits)
    }

    /// Argmax class, ties to the lowest index.
    pub fn predict(&self, x: &FeatureTensor) -> Result<usize> {
        let logits = self.logits(x)?;
        let mut best = 0;
        for (k, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = k;
            }
        }
        Ok(best)
    }

    fn check_trace(&self, trace: &ForwardTrace<'_>) -> Result<()> {
        let (d, h) = (self.dims.dims, self.dims.hidden);
        let t_len = trace.frames();
        if trace.fused.len() != t_len * d
            || trace.pre.len() != t_len * h
            || trace.embedding.len() != h
            || trace.logits.len() != self.dims.classes
        {
            return Err(Error::Shape(
                "forward trace does not match this model".into(),
            ));
        }
        Ok(())
    }

    /// Full backward pass from `dL/dlogits`.
    pub fn backward(&self, trace: &ForwardTrace<'_>, dlogits: &[f64]) -> Result<SerGrads> {
        self.check_trace(trace)?;
        let (h, c) = (self.dims.hidden, self.dims.classes);
        if dlogits.len() != c {
            return Err(Error::Shape(format!(
                "dlogits has {} entries, expected {c}",
                dlogits.len()
            )));
        }
        let mut w2 = vec![0.0; c * h];
        let mut de = vec![0.0; h];
        for k in 0..c {
            let g = dlogits[k];
            for j in 0..h {
                w2[k * h + j] = g * trace.embedding[j];
                de[j] += self.w2[k * h + j] * g;
            }
        }
        Ok(SerGrads {
            fuser: self.backward_embedding(trace, &de)?,
            w2,
            b2: dlogits.to_vec(),
        })
    }

    /// Backward pass of the feature fuser from `dL/de`.
    pub fn backward_embedding(&self, trace: &ForwardTrace<'_>, de: &[f64]) -> Result<FuserGrads> {
        self.check_trace(trace)?;
        let (d, h) = (self.dims.dims, self.dims.hidden);
        if de.len() != h {
            return Err(Error::Shape(format!(
                "de has {} entries, expected {h}",
                de.len()
            )));
        }
        let t_len = trace.frames();
        let inv_t = 1.0 / t_len as f64;
        let weighted = self.mode == ReprMode::WeightedLayers;

        let mut w1 = vec![0.0; h * d];
        let mut b1 = vec![0.0; h];
        let mut dfused = if weighted {
            vec![0.0; t_len * d]
        } else {
            Vec::new()
        };
        for t in 0..t_len {
            let frame = &trace.fused[t * d..(t + 1) * d];
            for j in 0..h {
                if trace.pre[t * h + j] <= 0.0 {
                    continue;
                }
                let dz = de[j] * inv_t;
                b1[j] += dz;
                axpy(&mut w1[j * d..(j + 1) * d], dz, frame);
                if weighted {
                    axpy(
                        &mut dfused[t * d..(t + 1) * d],
                        dz,
                        &self.w1[j * d..(j + 1) * d],
                    );
                }
            }
        }

        let fusion = weighted.then(|| {
            let x = trace.input;
            let dweights: Vec<f64> = (0..x.layers())
                .map(|l| {
                    x.layer(l)
                        .iter()
                        .zip(&dfused)
                        .map(|(&v, g)| f64::from(v) * g)
                        .sum::<f64>()
                })
                .collect();
            let mean: f64 = trace
                .weights
                .iter()
                .zip(&dweights)
                .map(|(w, g)| w * g)
                .sum();
            trace
                .weights
                .iter()
                .zip(&dweights)
                .map(|(w, g)| w * (g - mean))
                .collect()
        });
        Ok(FuserGrads { fusion, w1, b1 })
    }

    /// AdamW step over fusion logits (if any), `W1`, `b1`, `W2`, `b2`.
    pub fn apply_all(&mut self, opt: &mut AdamW, g: &SerGrads) -> Result<()> {
        let mut params = fuser_refs(
            self.mode,
            &mut self.fusion_logits,
            &mut self.w1,
            &mut self.b1,
            &g.fuser,
        );
        params.push(ParamRef::new("w2", &mut self.w2, &g.w2));
        params.push(ParamRef::new("b2", &mut self.b2, &g.b2));
        opt.step(&mut params)
    }

    /// AdamW step over the feature fuser only.
    pub fn apply_fuser(&mut self, opt: &mut AdamW, g: &FuserGrads) -> Result<()> {
        let mut params = fuser_refs(
            self.mode,
            &mut self.fusion_logits,
            &mut self.w1,
            &mut self.b1,
            g,
        );
        opt.step(&mut params)
    }

    /// Fusion logits, `W1`, `b1` concatenated; used for bit-level comparisons.
    pub fn fuser_snapshot(&self) -> Vec<f64> {
        let mut out = self.fusion_logits.clone();
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.b1);
        out
    }

    pub fn head_snapshot(&self) -> Vec<f64> {
        let mut out = self.w2.clone();
        out.extend_from_slice(&self.b2);
        out
    }

    /// Parameter groups in checkpoint order.
    pub fn param_groups(&self) -> [(&'static str, &Vec<f64>); 5] {
        [
            ("fusion_logits", &self.fusion_logits),
            ("w1", &self.w1),
            ("b1", &self.b1),
            ("w2", &self.w2),
            ("b2", &self.b2),
        ]
    }

    pub fn param_groups_mut(&mut self) -> [(&'static str, &mut Vec<f64>); 5] {
        [
            ("fusion_logits", &mut self.fusion_logits),
            ("w1", &mut self.w1),
            ("b1", &mut self.b1),
            ("w2", &mut self.w2),
            ("b2", &mut self.b2),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.param_groups()
            .iter()
            .all(|(_, g)| g.iter().all(|v| v.is_finite()))
    }
}
