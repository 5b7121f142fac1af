//! SERF feature files: little-endian header `"SERF"`, version `u32 = 1`,
//! `L: u16`, `D: u16`, `T: u32`, followed by `L*T*D` `f32` values in
//! layer-major, then frame-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SERF";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// `layers × frames × dims` features of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    layers: usize,
    frames: usize,
    dims: usize,
    data: Vec<f32>,
}

impl FeatureTensor {
    pub fn new(layers: usize, frames: usize, dims: usize, data: Vec<f32>) -> Result<Self> {
        if layers == 0 || frames == 0 || dims == 0 {
            return Err(Error::Shape(format!(
                "feature tensor needs positive sizes, got {layers}x{frames}x{dims}"
            )));
        }
        if layers > u16::MAX as usize || dims > u16::MAX as usize || frames > u32::MAX as usize {
            return Err(Error::Shape(format!(
                "feature tensor {layers}x{frames}x{dims} exceeds the file header range"
            )));
        }
        if data.len() != layers * frames * dims {
            return Err(Error::Shape(format!(
                "feature tensor {layers}x{frames}x{dims} needs {} values, got {}",
                layers * frames * dims,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                param: format!("features[{i}]"),
            });
        }
        Ok(Self {
            layers,
            frames,
            dims,
            data,
        })
    }

    pub fn zeros(layers: usize, frames: usize, dims: usize) -> Result<Self> {
        Self::new(layers, frames, dims, vec![0.0; layers * frames * dims])
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// `frames × dims` slice of one layer.
    pub fn layer(&self, l: usize) -> &[f32] {
        let n = self.frames * self.dims;
        &self.data[l * n..(l + 1) * n]
    }

    pub fn frame(&self, l: usize, t: usize) -> &[f32] {
        let start = (l * self.frames + t) * self.dims;
        &self.data[start..start + self.dims]
    }

    /// Same tensor with frames reordered by `order`.
    pub fn permute_frames(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.frames {
            return Err(Error::Shape("frame permutation has wrong length".into()));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for l in 0..self.layers {
            for &t in order {
                data.extend_from_slice(self.frame(l, t));
            }
        }
        Self::new(self.layers, self.frames, self.dims, data)
    }
}

pub fn encode_features(tensor: &FeatureTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + tensor.data.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensor.layers as u16).to_le_bytes());
    out.extend_from_slice(&(tensor.dims as u16).to_le_bytes());
    out.extend_from_slice(&(tensor.frames as u32).to_le_bytes());
    for v in &tensor.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureTensor> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(
            bytes.len(),
            format!(
                "truncated header: expected {HEADER_LEN} bytes, got {}",
                bytes.len()
            ),
        ));
    }
    if &bytes[0..4] != MAGIC {
        return Err(format_err(0, format!("bad magic {:?}", &bytes[0..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let layers = u16::from_le_bytes(bytes[8..10].try_into().expect("2 bytes")) as usize;
    let dims = u16::from_le_bytes(bytes[10..12].try_into().expect("2 bytes")) as usize;
    let frames = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    if layers == 0 || dims == 0 || frames == 0 {
        return Err(format_err(
            8,
            format!("zero-sized shape {layers}x{frames}x{dims}"),
        ));
    }
    let expected = layers * frames * dims * 4;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(format_err(
            HEADER_LEN + payload.len().min(expected),
            format!(
                "payload length mismatch: expected {expected} bytes, got {}",
                payload.len()
            ),
        ));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(format_err(HEADER_LEN + 4 * i, "non-finite feature value"));
    }
    FeatureTensor::new(layers, frames, dims, data)
}

pub fn write_features(path: &Path, tensor: &FeatureTensor) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, encode_features(tensor)).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<FeatureTensor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_features(&bytes)
}
