//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sersynth::corpus::FeatureTensor;
use sersynth::model::{bce_logit, cross_entropy, DomainHead, ModelDims, ReprMode, SerModel};
use sersynth::seed;

pub const FD_EPS: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Central difference of `f` with respect to `params[i]`. `params` is
/// restored afterwards; callers mirroring it elsewhere must restore too.
pub fn central_diff(params: &mut [f64], i: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = params[i];
    params[i] = orig + FD_EPS;
    let up = f(params);
    params[i] = orig - FD_EPS;
    let down = f(params);
    params[i] = orig;
    (up - down) / (2.0 * FD_EPS)
}

pub struct Instance {
    pub model: SerModel,
    pub head: DomainHead,
    pub x: FeatureTensor,
    pub label: usize,
    pub domain: f64,
}

pub fn small_instance(rng: &mut ChaCha8Rng, mode: ReprMode) -> Instance {
    let dims = ModelDims {
        layers: 3,
        dims: 6,
        hidden: 4,
        classes: 3,
    };
    let mut model = SerModel::new(dims, mode, rng);
    if mode == ReprMode::WeightedLayers {
        for v in &mut model.fusion_logits {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    let head = DomainHead::new(dims.hidden, rng);
    let frames = rng.random_range(1..=8);
    let data = (0..3 * frames * 6)
        .map(|_| rng.random_range(-2.0f32..2.0))
        .collect();
    Instance {
        model,
        head,
        x: FeatureTensor::new(3, frames, 6, data).unwrap(),
        label: rng.random_range(0..3),
        domain: f64::from(rng.random_range(0..2u8)),
    }
}

pub fn emotion_loss(model: &SerModel, x: &FeatureTensor, label: usize) -> f64 {
    cross_entropy(&model.logits(x).unwrap(), label).0
}

pub fn domain_loss(model: &SerModel, head: &DomainHead, x: &FeatureTensor, target: f64) -> f64 {
    let e = model.forward(x).unwrap().embedding;
    bce_logit(head.forward(&e).unwrap().logit, target).0
}

/// Worst relative error over every parameter of one instance: emotion loss
/// through the whole model, domain loss through the head, and the reversed
/// domain gradient into the fuser.
pub fn worst_gradient_error(inst: &Instance, lambda: f64) -> f64 {
    let mut worst = 0.0f64;
    let mut check = |analytic: &[f64], numeric: Vec<f64>| {
        assert_eq!(analytic.len(), numeric.len());
        for (a, n) in analytic.iter().zip(numeric) {
            worst = worst.max(rel_err(*a, n));
        }
    };

    let trace = inst.model.forward(&inst.x).unwrap();
    let (_, dlogits) = cross_entropy(&trace.logits, inst.label);
    let g = inst.model.backward(&trace, &dlogits).unwrap();
    let groups: [(&str, &[f64]); 5] = [
        ("fusion", g.fuser.fusion.as_deref().unwrap_or(&[])),
        ("w1", &g.fuser.w1),
        ("b1", &g.fuser.b1),
        ("w2", &g.w2),
        ("b2", &g.b2),
    ];
    for (gi, (_, analytic)) in groups.iter().enumerate() {
        let mut m = inst.model.clone();
        let len = m.param_groups()[gi].1.len();
        let numeric = (0..len)
            .map(|i| {
                let mut p = m.param_groups()[gi].1.clone();
                let n = central_diff(&mut p, i, |p| {
                    *m.param_groups_mut()[gi].1 = p.to_vec();
                    emotion_loss(&m, &inst.x, inst.label)
                });
                *m.param_groups_mut()[gi].1 = p;
                n
            })
            .collect();
        check(analytic, numeric);
    }

    // domain head
    let dtrace = inst.head.forward(&trace.embedding).unwrap();
    let (_, dlogit) = bce_logit(dtrace.logit, inst.domain);
    let (hg, de) = inst.head.backward(&dtrace, dlogit);
    let head_groups: [&[f64]; 4] = [&hg.w1, &hg.b1, &hg.w2, &hg.b2];
    for (gi, analytic) in head_groups.iter().enumerate() {
        let mut h = inst.head.clone();
        let len = head_param(&mut h, gi).len();
        let numeric = (0..len)
            .map(|i| {
                let mut p = head_param(&mut h, gi).clone();
                let n = central_diff(&mut p, i, |p| {
                    *head_param(&mut h, gi) = p.to_vec();
                    domain_loss(&inst.model, &h, &inst.x, inst.domain)
                });
                *head_param(&mut h, gi) = p;
                n
            })
            .collect();
        check(analytic, numeric);
    }

    // through the reversal layer into the fuser: -lambda * d(domain loss)
    let reversed = inst
        .model
        .backward_embedding(&trace, &de)
        .unwrap()
        .reversed(lambda);
    let fuser: [&[f64]; 3] = [
        reversed.fusion.as_deref().unwrap_or(&[]),
        &reversed.w1,
        &reversed.b1,
    ];
    for (gi, analytic) in fuser.iter().enumerate() {
        let mut m = inst.model.clone();
        let len = m.param_groups()[gi].1.len();
        let numeric = (0..len)
            .map(|i| {
                let mut p = m.param_groups()[gi].1.clone();
                let n = central_diff(&mut p, i, |p| {
                    *m.param_groups_mut()[gi].1 = p.to_vec();
                    domain_loss(&m, &inst.head, &inst.x, inst.domain)
                });
                *m.param_groups_mut()[gi].1 = p;
                -lambda * n
            })
            .collect();
        check(analytic, numeric);
    }
    worst
}

fn head_param(h: &mut DomainHead, i: usize) -> &mut Vec<f64> {
    match i {
        0 => &mut h.w1,
        1 => &mut h.b1,
        2 => &mut h.w2,
        _ => &mut h.b2,
    }
}

pub fn instance_rng(i: u64) -> ChaCha8Rng {
    seed::rng_for(0x6772_6164, i)
}

/// Distance a ReLU input must keep from zero so that no finite-difference
/// probe crosses the kink.
pub const KINK_MARGIN: f64 = 1e-3;

pub fn clear_of_kinks(inst: &Instance) -> bool {
    let trace = inst.model.forward(&inst.x).unwrap();
    let head = inst.head.forward(&trace.embedding).unwrap();
    trace
        .pre
        .iter()
        .chain(&head.pre)
        .all(|z| z.abs() > KINK_MARGIN)
}

/// The first `n` smooth instances from a fixed stream, with the number of
/// draws it took.
pub fn smooth_instances(n: usize, mode: ReprMode, stream: u64) -> (Vec<Instance>, u64) {
    let mut out = Vec::with_capacity(n);
    let mut draws = 0;
    while out.len() < n {
        let inst = small_instance(&mut instance_rng(stream + draws), mode);
        draws += 1;
        if clear_of_kinks(&inst) {
            out.push(inst);
        }
    }
    (out, draws)
}

/// Decoupled-weight-decay Adam, written from the update equations.
pub fn reference_adamw(
    theta: &mut [f64],
    grads: &[Vec<f64>],
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
    wd: f64,
) {
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    for (t, g) in grads.iter().enumerate() {
        let t = (t + 1) as i32;
        for i in 0..theta.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let mhat = m[i] / (1.0 - b1.powi(t));
            let vhat = v[i] / (1.0 - b2.powi(t));
            theta[i] -= lr * mhat / (vhat.sqrt() + eps) + lr * wd * theta[i];
        }
    }
}

/// WA and UA by counting utterances one at a time.
pub fn brute_wa_ua(truth: &[usize], pred: &[usize], classes: usize) -> (f64, f64) {
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
    let wa = correct as f64 / truth.len() as f64;
    let mut recalls = Vec::new();
    for c in 0..classes {
        let members: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == c).collect();
        if !members.is_empty() {
            let hit = members.iter().filter(|&&i| pred[i] == c).count();
            recalls.push(hit as f64 / members.len() as f64);
        }
    }
    (wa, recalls.iter().sum::<f64>() / recalls.len() as f64)
}
