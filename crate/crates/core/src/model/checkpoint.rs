//! Checkpoint file: one JSON header line, then every parameter array as raw
//! little-endian `f64` in declared order (fusion logits, `W1`, `b1`, `W2`,
//! `b2`, then the domain head if present).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DomainHead, ModelDims, ReprMode, SerModel, DOMAIN_HIDDEN};
use crate::error::{Error, Result};

const FORMAT: &str = "sersynth-checkpoint";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub strategy: String,
    pub epoch: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    dims: ModelDims,
    mode: ReprMode,
    domain_head: bool,
    #[serde(flatten)]
    meta: CheckpointMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: SerModel,
    pub domain_head: Option<DomainHead>,
    pub meta: CheckpointMeta,
}

fn expected_sizes(dims: &ModelDims, mode: ReprMode, domain_head: bool) -> Vec<usize> {
    let mut sizes = vec![
        if mode == ReprMode::WeightedLayers {
            dims.layers
        } else {
            0
        },
        dims.hidden * dims.dims,
        dims.hidden,
        dims.classes * dims.hidden,
        dims.classes,
    ];
    if domain_head {
        sizes.extend([DOMAIN_HIDDEN * dims.hidden, DOMAIN_HIDDEN, DOMAIN_HIDDEN, 1]);
    }
    sizes
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let header = Header {
        format: FORMAT.into(),
        version: 1,
        dims: ckpt.model.dims,
        mode: ckpt.model.mode,
        domain_head: ckpt.domain_head.is_some(),
        meta: ckpt.meta.clone(),
    };
    let mut bytes = serde_json::to_vec(&header)?;
    bytes.push(b'\n');
    let groups = ckpt
        .model
        .param_groups()
        .into_iter()
        .chain(ckpt.domain_head.iter().flat_map(|h| h.param_groups()));
    for (_, values) in groups {
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(bytes)
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let bytes = encode_checkpoint(ckpt)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads a checkpoint, rejecting it if `expected` dims are given and differ.
pub fn load_checkpoint(path: &Path, expected: Option<ModelDims>) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, expected)
}

pub fn decode_checkpoint(bytes: &[u8], expected: Option<ModelDims>) -> Result<Checkpoint> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format {
            offset: bytes.len() as u64,
            message: "missing checkpoint header terminator".into(),
        })?;
    let header: Header = serde_json::from_slice(&bytes[..newline]).map_err(|e| Error::Format {
        offset: 0,
        message: format!("bad checkpoint header: {e}"),
    })?;
    if header.format != FORMAT || header.version != 1 {
        return Err(Error::Format {
            offset: 0,
            message: format!(
                "unsupported checkpoint {} v{}",
                header.format, header.version
            ),
        });
    }
    if let Some(dims) = expected {
        // the layer count carries no parameters in last-layer mode
        let comparable = match header.mode {
            ReprMode::LastLayer => ModelDims {
                layers: header.dims.layers,
                ..dims
            },
            ReprMode::WeightedLayers => dims,
        };
        if comparable != header.dims {
            return Err(Error::Validation(format!(
                "checkpoint dims {:?} do not match configured {:?}",
                header.dims, dims
            )));
        }
    }

    let sizes = expected_sizes(&header.dims, header.mode, header.domain_head);
    let payload = &bytes[newline + 1..];
    let need = sizes.iter().sum::<usize>() * 8;
    if payload.len() != need {
        return Err(Error::Format {
            offset: (newline + 1) as u64,
            message: format!("expected {need} parameter bytes, got {}", payload.len()),
        });
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut arrays: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&n| values.by_ref().take(n).collect())
        .collect();

    let domain_head = header.domain_head.then(|| {
        let mut tail = arrays.split_off(5).into_iter();
        DomainHead {
            input: header.dims.hidden,
            w1: tail.next().expect("domain w1"),
            b1: tail.next().expect("domain b1"),
            w2: tail.next().expect("domain w2"),
            b2: tail.next().expect("domain b2"),
        }
    });
    let mut it = arrays.into_iter();
    let model = SerModel {
        mode: header.mode,
        dims: header.dims,
        fusion_logits: it.next().expect("fusion"),
        w1: it.next().expect("w1"),
        b1: it.next().expect("b1"),
        w2: it.next().expect("w2"),
        b2: it.next().expect("b2"),
    };
    Ok(Checkpoint {
        model,
        domain_head,
        meta: header.meta,
    })
}
