//! Single-file probe archive.
//!
//! Layout: 8-byte magic, `u32` LE format version, `u64` LE header length,
//! a JSON header, then a payload of little-endian `f64` values. The header
//! records the layer selection and, per probe, the shape and payload
//! offset (in values) of every tensor. Matrices are row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{LayerSelection, Mlp, ProbeParams, Standardizer};
use crate::error::{Error, Result};

pub const BUNDLE_MAGIC: &[u8; 8] = b"CDMPROBE";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeBundle {
    pub probes: Vec<ProbeParams>,
    pub selection: LayerSelection,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    selection: LayerSelection,
    probes: Vec<ProbeHeader>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProbeHeader {
    layer: usize,
    trained: bool,
    tensors: Vec<TensorHeader>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

const TENSORS: [&str; 6] = ["mean", "std", "w1", "b1", "w2", "b2"];

impl ProbeBundle {
    pub fn probe(&self, layer: usize) -> Option<&ProbeParams> {
        self.probes.iter().find(|p| p.layer == layer)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut payload: Vec<f64> = Vec::new();
        let mut probes = Vec::with_capacity(self.probes.len());
        for p in &self.probes {
            let mut tensors = Vec::new();
            let mut push =
                |name: &str, shape: Vec<usize>, values: &mut dyn Iterator<Item = f64>| {
                    tensors.push(TensorHeader {
                        name: name.to_string(),
                        shape,
                        offset: payload.len(),
                    });
                    payload.extend(values);
                };
            let (d, h) = (p.mlp.input_dim(), p.mlp.hidden_dim());
            push("mean", vec![d], &mut p.standardizer.mean.iter().copied());
            push("std", vec![d], &mut p.standardizer.std.iter().copied());
            push("w1", vec![d, h], &mut p.mlp.w1.iter().copied());
            push("b1", vec![h], &mut p.mlp.b1.iter().copied());
            push("w2", vec![h], &mut p.mlp.w2.iter().copied());
            push("b2", vec![], &mut std::iter::once(p.mlp.b2));
            probes.push(ProbeHeader {
                layer: p.layer,
                trained: p.trained,
                tensors,
            });
        }
        let header = serde_json::to_vec(&Header {
            selection: self.selection.clone(),
            probes,
        })
        .map_err(std::io::Error::from)?;

        w.write_all(BUNDLE_MAGIC)?;
        w.write_all(&BUNDLE_VERSION.to_le_bytes())?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        for v in payload {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BUNDLE_MAGIC {
            return Err(Error::Bundle("bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != BUNDLE_VERSION {
            return Err(Error::Bundle(format!("unsupported version {version}")));
        }
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u64buf)?;
        let header_len = u64::from_le_bytes(u64buf) as usize;
        let mut header = vec![0u8; header_len];
        r.read_exact(&mut header)?;
        let header: Header =
            serde_json::from_slice(&header).map_err(|e| Error::Bundle(format!("header: {e}")))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Bundle(
                "payload is not a whole number of f64 values".into(),
            ));
        }
        let payload: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();

        let probes = header
            .probes
            .iter()
            .map(|ph| decode_probe(ph, &payload))
            .collect::<Result<Vec<_>>>()?;
        for layer in &header.selection.chosen {
            if !probes.iter().any(|p| p.layer == *layer) {
                return Err(Error::Bundle(format!("chosen layer {layer} has no probe")));
            }
        }
        Ok(Self {
            probes,
            selection: header.selection,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn decode_probe(ph: &ProbeHeader, payload: &[f64]) -> Result<ProbeParams> {
    let names: Vec<&str> = ph.tensors.iter().map(|t| t.name.as_str()).collect();
    if names != TENSORS {
        return Err(Error::Bundle(format!(
            "layer {}: expected tensors {TENSORS:?}, found {names:?}",
            ph.layer
        )));
    }
    let slice = |t: &TensorHeader| -> Result<&[f64]> {
        let n: usize = t.shape.iter().product();
        payload.get(t.offset..t.offset + n).ok_or_else(|| {
            Error::Bundle(format!(
                "layer {}: tensor {} out of range",
                ph.layer, t.name
            ))
        })
    };
    let [mean, std, w1, b1, w2, b2] = [0, 1, 2, 3, 4, 5].map(|i| &ph.tensors[i]);
    let (d, h) = match w1.shape.as_slice() {
        [d, h] => (*d, *h),
        _ => return Err(Error::Bundle(format!("layer {}: w1 must be 2-D", ph.layer))),
    };
    let shapes_ok = mean.shape == [d]
        && std.shape == [d]
        && b1.shape == [h]
        && w2.shape == [h]
        && b2.shape.is_empty();
    if !shapes_ok {
        return Err(Error::Bundle(format!(
            "layer {}: inconsistent shapes",
            ph.layer
        )));
    }
    let w1 = Array2::from_shape_vec((d, h), slice(w1)?.to_vec())
        .map_err(|e| Error::Bundle(e.to_string()))?;
    Ok(ProbeParams {
        layer: ph.layer,
        standardizer: Standardizer {
            mean: Array1::from(slice(mean)?.to_vec()),
            std: Array1::from(slice(std)?.to_vec()),
        },
        mlp: Mlp {
            w1,
            b1: Array1::from(slice(b1)?.to_vec()),
            w2: Array1::from(slice(w2)?.to_vec()),
            b2: slice(b2)?[0],
        },
        trained: ph.trained,
    })
}
