//! Versioned JSON checkpoints.
//!
//! Numbers are written in shortest round-trip decimal form and parsed with
//! correct rounding, so every `f64` survives a save/load cycle bit-for-bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::feature::{encode, FeatureRecord, FeatureVector, Layout, NormStats};
use crate::mlp::{predict, train, DenseLayer, MlpNetwork, Prediction, TrainConfig};

pub const CHECKPOINT_VERSION: u64 = 1;

/// A trained classifier with everything needed to score new records.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: MlpNetwork,
    pub config: TrainConfig,
    pub norm_stats: Option<NormStats>,
}

#[derive(Serialize, Deserialize)]
struct NormStatsFile {
    mean: Vec<f64>,
    std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u64,
    layout: Layout,
    layer_dims: Vec<usize>,
    seed: u64,
    /// One `fan_out × fan_in` matrix per layer, as a list of rows.
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
    config: TrainConfig,
    norm_stats: Option<NormStatsFile>,
}

impl Checkpoint {
    /// Encodes, optionally normalizes, and trains on `ds`. Returns the
    /// checkpoint with the per-epoch loss history.
    pub fn fit(ds: &Dataset, config: &TrainConfig) -> Result<(Checkpoint, Vec<f64>)> {
        config.validate()?;
        let mut samples = ds.encode(config.layout);
        let norm_stats = if config.normalize {
            let vectors: Vec<FeatureVector> = samples.iter().map(|(x, _)| x.clone()).collect();
            let stats = NormStats::fit(&vectors)?;
            for (x, _) in &mut samples {
                *x = stats.apply(x)?;
            }
            Some(stats)
        } else {
            None
        };
        let outcome = train(&samples, config)?;
        Ok((
            Checkpoint {
                network: outcome.network,
                config: config.clone(),
                norm_stats,
            },
            outcome.history,
        ))
    }

    pub fn layout(&self) -> Layout {
        self.network.layout()
    }

    /// The exact vector the network sees for `record`.
    pub fn model_input(&self, record: &FeatureRecord) -> Result<FeatureVector> {
        let x = encode(record, self.layout());
        match &self.norm_stats {
            Some(stats) => stats.apply(&x),
            None => Ok(x),
        }
    }

    pub fn predict(&self, record: &FeatureRecord) -> Result<Prediction> {
        predict(
            &self.network,
            &self.model_input(record)?,
            self.config.threshold,
        )
    }

    fn to_file(&self) -> Result<CheckpointFile> {
        let net = &self.network;
        let all_finite = net
            .layers()
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()));
        if !all_finite {
            return Err(Error::NonFinite(
                "network parameters contain NaN or infinity".into(),
            ));
        }
        Ok(CheckpointFile {
            version: CHECKPOINT_VERSION,
            layout: net.layout(),
            layer_dims: net.layer_dims().to_vec(),
            seed: net.seed(),
            weights: net
                .layers()
                .iter()
                .map(|l| l.weights.chunks(l.fan_in).map(<[f64]>::to_vec).collect())
                .collect(),
            biases: net.layers().iter().map(|l| l.biases.clone()).collect(),
            config: self.config.clone(),
            norm_stats: self.norm_stats.as_ref().map(|s| NormStatsFile {
                mean: s.mean.clone(),
                std: s.std.clone(),
            }),
        })
    }

    fn from_file(file: CheckpointFile) -> Result<Self> {
        let dims = &file.layer_dims;
        if dims.len() != file.weights.len() + 1 || file.weights.len() != file.biases.len() {
            return Err(Error::Shape(format!(
                "layer_dims {:?} do not match {} weight and {} bias entries",
                dims,
                file.weights.len(),
                file.biases.len()
            )));
        }
        let mut layers = Vec::with_capacity(file.weights.len());
        for (i, (rows, biases)) in file.weights.into_iter().zip(file.biases).enumerate() {
            let (fan_in, fan_out) = (dims[i], dims[i + 1]);
            if rows.len() != fan_out || rows.iter().any(|r| r.len() != fan_in) {
                return Err(Error::Shape(format!(
                    "layer {i} weights are not {fan_out}x{fan_in}"
                )));
            }
            layers.push(DenseLayer {
                fan_in,
                fan_out,
                weights: rows.into_iter().flatten().collect(),
                biases,
            });
        }
        let network = MlpNetwork::from_layers(file.layout, layers, file.seed)?;
        if file.config.layout != file.layout {
            return Err(Error::LayoutMismatch {
                expected: file.layout,
                found: file.config.layout,
            });
        }
        let norm_stats = match file.norm_stats {
            None => None,
            Some(s) => {
                let n = file.layout.len();
                if s.mean.len() != n || s.std.len() != n {
                    return Err(Error::Shape(format!(
                        "normalization statistics need {n} slots"
                    )));
                }
                Some(NormStats {
                    layout: file.layout,
                    mean: s.mean,
                    std: s.std,
                })
            }
        };
        Ok(Checkpoint {
            network,
            config: file.config,
            norm_stats,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(&self.to_file()?).map_err(Error::from_json)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(Error::from_json)?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(CHECKPOINT_VERSION) => {}
            Some(found) => {
                return Err(Error::UnsupportedVersion {
                    found,
                    expected: CHECKPOINT_VERSION,
                })
            }
            None => {
                return Err(Error::validation(
                    "<checkpoint>",
                    "missing or non-integer \"version\"",
                ))
            }
        }
        // Re-parse from text: going through `Value` would not preserve the
        // correctly rounded float parse.
        let file: CheckpointFile = serde_json::from_str(text).map_err(Error::from_json)?;
        Self::from_file(file)
    }
}

pub fn save_checkpoint(c: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, c.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&text)
}
