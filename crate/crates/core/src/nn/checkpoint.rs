//! Single-file parameter container.
//!
//! ```text
//! magic            8 bytes   b"CZSLMLP\0"
//! version          u32 LE    1
//! descriptor_len   u32 LE    N
//! descriptor       N bytes   UTF-8 JSON, see CheckpointDescriptor
//! payload          for each layer: weight (out × in, row-major), then bias (out),
//!                  little-endian IEEE-754 of the descriptor's dtype
//! ```
//!
//! `f32` networks use binary32 payloads; `f64` networks use binary64.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Layer, Mlp};
use crate::{Error, Result, Scalar};

const MAGIC: &[u8; 8] = b"CZSLMLP\0";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDescriptor {
    #[serde(rename = "in")]
    pub in_dim: usize,
    #[serde(rename = "out")]
    pub out_dim: usize,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointDescriptor {
    pub dtype: String,
    pub seed: u64,
    /// Optimizer steps applied to the parameters.
    pub step: u64,
    pub layers: Vec<LayerDescriptor>,
}

pub fn checkpoint_bytes<T: Scalar>(mlp: &Mlp<T>, step: u64) -> Vec<u8> {
    let descriptor = CheckpointDescriptor {
        dtype: T::DTYPE.to_string(),
        seed: mlp.seed(),
        step,
        layers: mlp
            .layers()
            .iter()
            .map(|l| LayerDescriptor {
                in_dim: l.in_dim(),
                out_dim: l.out_dim(),
                activation: l.activation,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&descriptor).expect("descriptor serializes");
    let mut out = Vec::with_capacity(16 + json.len() + mlp.num_params() * T::BYTES);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in mlp.params_flat() {
        v.write_le(&mut out);
    }
    out
}

pub fn write_checkpoint<T: Scalar, W: Write>(
    mut w: W,
    mlp: &Mlp<T>,
    step: u64,
) -> std::io::Result<()> {
    w.write_all(&checkpoint_bytes(mlp, step))
}

fn format_err(file: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        file: file.to_path_buf(),
        message: message.into(),
    }
}

fn parse_header(bytes: &[u8], origin: &Path) -> Result<(CheckpointDescriptor, usize)> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(format_err(origin, "not a parameter checkpoint (bad magic)"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(format_err(origin, format!("unsupported version {version}")));
    }
    let len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = 16 + len;
    if bytes.len() < body {
        return Err(format_err(origin, "truncated descriptor"));
    }
    Ok((serde_json::from_slice(&bytes[16..body])?, body))
}

/// Reads only the descriptor of a checkpoint file, whatever its dtype.
pub fn read_descriptor(path: &Path) -> Result<CheckpointDescriptor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_header(&bytes, path).map(|(desc, _)| desc)
}

/// Parses a checkpoint. `origin` is only used in error messages.
pub fn read_checkpoint<T: Scalar, R: Read>(mut r: R, origin: &Path) -> Result<(Mlp<T>, u64)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::io(origin, e))?;
    let (desc, body) = parse_header(&bytes, origin)?;
    if desc.dtype != T::DTYPE {
        return Err(format_err(
            origin,
            format!(
                "payload dtype {} cannot be read as {}",
                desc.dtype,
                T::DTYPE
            ),
        ));
    }
    let expected: usize = desc
        .layers
        .iter()
        .map(|l| (l.in_dim * l.out_dim + l.out_dim) * T::BYTES)
        .sum();
    let payload = &bytes[body..];
    if payload.len() != expected {
        return Err(format_err(
            origin,
            format!(
                "payload at offset {body} holds {} bytes, descriptor implies {expected}",
                payload.len()
            ),
        ));
    }
    let mut values = payload.chunks_exact(T::BYTES).map(T::read_le);
    let mut layers = Vec::with_capacity(desc.layers.len());
    for l in &desc.layers {
        let weight: Vec<T> = values.by_ref().take(l.in_dim * l.out_dim).collect();
        let bias: Vec<T> = values.by_ref().take(l.out_dim).collect();
        layers.push(Layer {
            weight: Array2::from_shape_vec((l.out_dim, l.in_dim), weight)
                .map_err(|e| format_err(origin, e.to_string()))?,
            bias: Array1::from_vec(bias),
            activation: l.activation,
        });
    }
    let mlp = Mlp::from_layers(layers, desc.seed).map_err(|e| format_err(origin, e.to_string()))?;
    Ok((mlp, desc.step))
}

pub fn save_checkpoint<T: Scalar>(path: &Path, mlp: &Mlp<T>, step: u64) -> Result<()> {
    fs::write(path, checkpoint_bytes(mlp, step)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(Mlp<T>, u64)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(std::io::BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            dims in proptest::collection::vec(1usize..6, 2..5),
            seed in any::<u64>(),
            step in any::<u64>(),
            relu in any::<bool>(),
        ) {
            let act = if relu { Activation::Relu } else { Activation::Identity };
            let acts = vec![act; dims.len() - 1];
            let mlp = Mlp::<f32>::init(&dims, &acts, seed).unwrap();
            let bytes = checkpoint_bytes(&mlp, step);
            let (back, back_step) = read_checkpoint::<f32, _>(&bytes[..], Path::new("mem")).unwrap();
            prop_assert_eq!(back_step, step);
            prop_assert_eq!(checkpoint_bytes(&back, step), bytes);
            let a: Vec<u32> = mlp.params_flat().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = back.params_flat().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn f64_round_trip_and_dtype_guard() {
        let mlp = Mlp::<f64>::init(&[3, 2], &[Activation::Identity], 1).unwrap();
        let bytes = checkpoint_bytes(&mlp, 7);
        let (back, step) = read_checkpoint::<f64, _>(&bytes[..], Path::new("mem")).unwrap();
        assert_eq!(back, mlp);
        assert_eq!(step, 7);
        assert!(read_checkpoint::<f32, _>(&bytes[..], Path::new("mem")).is_err());
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mlp = Mlp::<f32>::init(&[3, 2], &[Activation::Identity], 1).unwrap();
        let bytes = checkpoint_bytes(&mlp, 0);
        let err =
            read_checkpoint::<f32, _>(&bytes[..bytes.len() - 1], Path::new("x.ckpt")).unwrap_err();
        assert!(err.to_string().contains("x.ckpt"));
    }
}
