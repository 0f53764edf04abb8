//! Binary model file.
//!
//! Layout (little-endian):
//!
//! ```text
//! b"PHSVM\0"  u32 version  u32 header_len  header (JSON)
//! per label, canonical order:
//!   u8 trained  u64 positives  u64 negatives  f64 bias  u64 nnz  nnz x (u32 index, f64 value)
//! ```
//!
//! Weights are stored sparsely; zeros are implied.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassifierError, ClassifierParams, FeatureSpace, LabelModel, LinearModel, HASH_BITS};
use crate::label::{PhenotypeLabel, LABEL_COUNT};
use crate::lexicon::write_atomic;

pub const MODEL_MAGIC: &[u8; 6] = b"PHSVM\0";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    hash_bits: u32,
    labels: Vec<PhenotypeLabel>,
    simclin_phrases: Vec<String>,
    params: ClassifierParams,
}

fn format_err(msg: impl Into<String>) -> ClassifierError {
    ClassifierError::Format(msg.into())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ClassifierError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format_err(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ClassifierError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ClassifierError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ClassifierError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ClassifierError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl LinearModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            hash_bits: HASH_BITS,
            labels: self.labels.iter().map(|l| l.label).collect(),
            simclin_phrases: self.space.simclin_phrases().to_vec(),
            params: self.params.clone(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for lm in &self.labels {
            out.push(u8::from(lm.trained));
            out.extend_from_slice(&(lm.positives as u64).to_le_bytes());
            out.extend_from_slice(&(lm.negatives as u64).to_le_bytes());
            out.extend_from_slice(&lm.bias.to_le_bytes());
            let nz: Vec<(u32, f64)> = lm
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0 || w.is_sign_negative())
                .map(|(i, &w)| (i as u32, w))
                .collect();
            out.extend_from_slice(&(nz.len() as u64).to_le_bytes());
            for (i, w) in nz {
                out.extend_from_slice(&i.to_le_bytes());
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ClassifierError> {
        let mut c = Cursor { bytes, pos: 0 };
        if c.take(MODEL_MAGIC.len())? != MODEL_MAGIC {
            return Err(format_err("not a model file (bad magic)"));
        }
        let version = c.u32()?;
        if version != MODEL_VERSION {
            return Err(format_err(format!("unsupported model version {version}")));
        }
        let hlen = c.u32()? as usize;
        let header: Header = serde_json::from_slice(c.take(hlen)?)
            .map_err(|e| format_err(format!("header: {e}")))?;
        if header.hash_bits != HASH_BITS {
            return Err(format_err(format!("hash width {} (expected {HASH_BITS})", header.hash_bits)));
        }
        if header.labels != PhenotypeLabel::ALL {
            return Err(format_err(format!(
                "label list must be the {LABEL_COUNT} labels in canonical order"
            )));
        }
        header.params.validate()?;
        let space = FeatureSpace::new(header.simclin_phrases);
        let dim = space.dimension();
        let mut labels = Vec::with_capacity(LABEL_COUNT);
        for label in PhenotypeLabel::ALL {
            let trained = match c.u8()? {
                0 => false,
                1 => true,
                b => return Err(format_err(format!("{label}: bad trained flag {b}"))),
            };
            let positives = c.u64()? as usize;
            let negatives = c.u64()? as usize;
            let bias = c.f64()?;
            let nnz = c.u64()? as usize;
            let mut weights = if trained { vec![0.0; dim] } else { Vec::new() };
            if !trained && nnz != 0 {
                return Err(format_err(format!("{label}: untrained label carries weights")));
            }
            let mut prev: Option<u32> = None;
            for _ in 0..nnz {
                let i = c.u32()?;
                let w = c.f64()?;
                if (i as usize) >= dim || prev.is_some_and(|p| p >= i) {
                    return Err(format_err(format!("{label}: bad weight index {i}")));
                }
                prev = Some(i);
                weights[i as usize] = w;
            }
            labels.push(LabelModel {
                label,
                trained,
                weights,
                bias,
                positives,
                negatives,
            });
        }
        if c.pos != bytes.len() {
            return Err(format_err(format!("{} trailing bytes", bytes.len() - c.pos)));
        }
        Ok(LinearModel {
            space,
            labels,
            params: header.params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        write_atomic(path.as_ref(), &self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
