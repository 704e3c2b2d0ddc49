//! JSON checkpoint container.
//!
//! ```json
//! {
//!   "format": "amplifier-estimator",
//!   "version": 1,
//!   "config": { "user_count": .., "user_dims": [..], "content_dims": [..],
//!               "dropout": .., "activation": "relu" },
//!   "tensors": [ { "name": "user_embeddings", "shape": [n, 32], "data": [..] }, .. ]
//! }
//! ```
//!
//! Tensors appear in a fixed order, row-major. Floats are written in shortest
//! round-trip form, so save/load is exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Dense, Mlp};
use super::{EstimatorModel, ModelConfig, TENSOR_NAMES};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "amplifier-estimator";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Tensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config: ModelConfig,
    tensors: Vec<Tensor>,
}

impl EstimatorModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let checkpoint = Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            tensors: TENSOR_NAMES
                .iter()
                .zip(self.tensor_shapes())
                .zip(self.tensors())
                .map(|((name, shape), data)| Tensor {
                    name: name.to_string(),
                    shape,
                    data: data.to_vec(),
                })
                .collect(),
        };
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer(&mut out, &checkpoint)?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let checkpoint: Checkpoint = serde_json::from_reader(BufReader::new(file))?;
        if checkpoint.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", checkpoint.format)));
        }
        if checkpoint.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {}",
                checkpoint.version
            )));
        }
        let config = checkpoint.config;
        config.validate()?;
        let [ue, uh, up] = config.user_dims;
        let [ce, ch, cp] = config.content_dims;
        let mut model = EstimatorModel {
            user_embeddings: Vec::new(),
            user_mlp: Mlp {
                hidden: Dense::zeros(ue, uh),
                output: Dense::zeros(uh, up),
                activation: config.activation,
            },
            content_mlp: Mlp {
                hidden: Dense::zeros(ce, ch),
                output: Dense::zeros(ch, cp),
                activation: config.activation,
            },
            config,
        };
        let shapes = model.tensor_shapes();
        if checkpoint.tensors.len() != TENSOR_NAMES.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                TENSOR_NAMES.len(),
                checkpoint.tensors.len()
            )));
        }
        for (k, (slot, tensor)) in model.tensors_mut().into_iter().zip(checkpoint.tensors).enumerate() {
            if tensor.name != TENSOR_NAMES[k] || tensor.shape != shapes[k] {
                return Err(Error::Checkpoint(format!(
                    "tensor {k}: expected {} {:?}, found {} {:?}",
                    TENSOR_NAMES[k], shapes[k], tensor.name, tensor.shape
                )));
            }
            if tensor.data.len() != shapes[k].iter().product::<usize>() {
                return Err(Error::Checkpoint(format!("tensor {} has the wrong length", tensor.name)));
            }
            *slot = tensor.data;
        }
        if !model.is_finite() {
            return Err(Error::NonFinite("checkpoint parameters"));
        }
        Ok(model)
    }
}
