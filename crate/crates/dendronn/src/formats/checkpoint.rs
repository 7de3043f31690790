//! Readout checkpoints.
//!
//! Layout: `DNRO`, `u32 version`, `u32 header_len`, a JSON header, the
//! row-major `n_classes x n_units` weights as `f32`, one mask byte per
//! weight (1 = kept), then the int8 twin if the header declares one.

use std::io::{Read, Write};
use std::path::Path;

use dendronn_core::readout::{QuantizedWeights, ReadoutModel};
use serde::{Deserialize, Serialize};

use super::{create, expect_eof, open, read_json_header, read_u8s, write_json_header};
use crate::error::{Error, PathContext, Result};

const MAGIC: &[u8; 4] = b"DNRO";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Quantization {
    scale: f64,
    zero_point: i8,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    n_classes: usize,
    n_units: usize,
    class_names: Vec<String>,
    quantization: Option<Quantization>,
    null_thresholds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub class_names: Vec<String>,
    pub model: ReadoutModel,
}

/// Copy of `model` with every weight rounded to `f32`, keeping the int8
/// twin and thresholds. Calibrating on the rounded model makes a saved
/// checkpoint behave exactly like the in-memory one.
pub fn round_to_f32(model: &ReadoutModel) -> Result<ReadoutModel> {
    let weights = model.weights().iter().map(|&w| w as f32 as f64).collect();
    let mut out = ReadoutModel::from_parts(model.n_classes(), model.n_units(), weights, model.mask().to_vec())?;
    if let Some(q) = model.quantized() {
        out.set_quantized(q.clone())?;
    }
    if let Some(t) = model.null_thresholds() {
        out.set_null_thresholds(t.to_vec())?;
    }
    Ok(out)
}

impl Checkpoint {
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        let m = &self.model;
        let header = Header {
            n_classes: m.n_classes(),
            n_units: m.n_units(),
            class_names: self.class_names.clone(),
            quantization: m.quantized().map(|q| Quantization {
                scale: q.scale,
                zero_point: q.zero_point,
            }),
            null_thresholds: m.null_thresholds().map(<[f64]>::to_vec),
        };
        write_json_header(w, MAGIC, VERSION, &header)?;
        for &x in m.weights() {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
        let mask: Vec<u8> = m.mask().iter().map(|&k| u8::from(k)).collect();
        w.write_all(&mask)?;
        if let Some(q) = m.quantized() {
            let bytes: Vec<u8> = q.values.iter().map(|&v| v as u8).collect();
            w.write_all(&bytes)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let h: Header = read_json_header(r, MAGIC, VERSION, "checkpoint")?;
        if !h.class_names.is_empty() && h.class_names.len() != h.n_classes {
            return Err(Error::format("checkpoint", "class name count differs from n_classes"));
        }
        let n = h.n_classes * h.n_units;
        let weights = (0..n)
            .map(|_| Ok(f32::from_le_bytes(read_u8s(r)?) as f64))
            .collect::<Result<Vec<_>>>()?;
        let mut raw = vec![0u8; n];
        r.read_exact(&mut raw)?;
        let mask = raw
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                b => Err(Error::format("checkpoint", format!("mask byte {b}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = ReadoutModel::from_parts(h.n_classes, h.n_units, weights, mask)?;
        if let Some(q) = h.quantization {
            r.read_exact(&mut raw)?;
            model.set_quantized(QuantizedWeights {
                values: raw.iter().map(|&b| b as i8).collect(),
                scale: q.scale,
                zero_point: q.zero_point,
            })?;
        }
        if let Some(t) = h.null_thresholds {
            model.set_null_thresholds(t)?;
        }
        expect_eof(r, "checkpoint")?;
        Ok(Self {
            class_names: h.class_names,
            model,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        self.write(&mut w)?;
        w.flush().at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(&mut open(path)?)
    }
}
