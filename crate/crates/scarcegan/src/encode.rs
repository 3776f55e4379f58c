//! One-hot symbolic attributes with an unseen-category bucket each, and
//! min-max scaled numeric attributes, fitted on training records only.

use std::collections::{BTreeSet, HashMap};

use scarcegan_core::scale::MinMax;
use scarcegan_core::Matrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::kdd::{KddCategory, KddRecord, NUMERIC_COUNT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    /// Sorted vocabularies of `protocol_type`, `service`, `flag`.
    pub vocab: [Vec<String>; 3],
    pub numeric_min: Vec<f64>,
    pub numeric_max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub x: Matrix,
    pub categories: Vec<KddCategory>,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

impl Encoder {
    pub fn fit(records: &[KddRecord]) -> Self {
        let mut vocab: [BTreeSet<String>; 3] = Default::default();
        let mut min = vec![f64::INFINITY; NUMERIC_COUNT];
        let mut max = vec![f64::NEG_INFINITY; NUMERIC_COUNT];
        for r in records {
            for (v, s) in vocab.iter_mut().zip(&r.symbolic) {
                if !v.contains(s) {
                    v.insert(s.clone());
                }
            }
            for (j, x) in r.numeric.iter().enumerate() {
                min[j] = min[j].min(*x);
                max[j] = max[j].max(*x);
            }
        }
        if records.is_empty() {
            min.fill(0.0);
            max.fill(0.0);
        }
        Self {
            vocab: vocab.map(|v| v.into_iter().collect()),
            numeric_min: min,
            numeric_max: max,
        }
    }

    /// Numeric columns, then each symbolic vocabulary followed by its unseen bucket.
    pub fn width(&self) -> usize {
        NUMERIC_COUNT + self.vocab.iter().map(|v| v.len() + 1).sum::<usize>()
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut out: Vec<String> = crate::kdd::FIELD_NAMES
            .iter()
            .enumerate()
            .filter(|(i, _)| !crate::kdd::SYMBOLIC_FIELDS.contains(i))
            .map(|(_, n)| n.to_string())
            .collect();
        for (k, v) in self.vocab.iter().enumerate() {
            let field = crate::kdd::FIELD_NAMES[crate::kdd::SYMBOLIC_FIELDS[k]];
            out.extend(v.iter().map(|s| format!("{field}={s}")));
            out.push(format!("{field}=<unseen>"));
        }
        out
    }

    pub fn encode(&self, records: &[KddRecord]) -> Result<EncodedDataset> {
        let scaler = MinMax {
            min: self.numeric_min.clone(),
            max: self.numeric_max.clone(),
        };
        let lookup: Vec<HashMap<&str, usize>> = self
            .vocab
            .iter()
            .map(|v| v.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect())
            .collect();
        let width = self.width();
        let mut data = vec![0.0; records.len() * width];
        for (r, row) in records.iter().zip(data.chunks_mut(width)) {
            for (j, x) in r.numeric.iter().enumerate() {
                row[j] = scaler.scale_value(j, *x);
            }
            let mut offset = NUMERIC_COUNT;
            for (k, s) in r.symbolic.iter().enumerate() {
                let slot = lookup[k].get(s.as_str()).copied().unwrap_or(self.vocab[k].len());
                row[offset + slot] = 1.0;
                offset += self.vocab[k].len() + 1;
            }
        }
        Ok(EncodedDataset {
            x: Matrix::from_vec(records.len(), width, data)?,
            categories: records.iter().map(|r| r.category).collect(),
        })
    }

    /// SHA-256 of the serialized metadata, hex encoded.
    pub fn checksum(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("encoder metadata serializes");
        hex(&Sha256::digest(bytes))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("encoder metadata serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Fits on `train`, then encodes `train` and `test` with the same metadata.
/// The metadata checksum is compared before and after the test pass.
pub fn encode_split(train: &[KddRecord], test: &[KddRecord]) -> Result<(Encoder, EncodedDataset, EncodedDataset)> {
    let enc = Encoder::fit(train);
    let before = enc.checksum();
    let tr = enc.encode(train)?;
    let te = enc.encode(test)?;
    assert_eq!(before, enc.checksum(), "encoder metadata changed while encoding test data");
    Ok((enc, tr, te))
}
