use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::OptimizerState;
use super::network::{accumulate, forward, init_network, MlpNetwork};
use crate::data::SplitMode;
use crate::error::{Error, Result};
use crate::feature::{FeatureVector, Layout};

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub layout: Layout,
    pub hidden_dims: Vec<usize>,
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub threshold: f64,
    pub seed: u64,
    pub normalize: bool,
    pub split_ratio: f64,
    pub split_mode: SplitMode,
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_epsilon() -> f64 {
    1e-8
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layout: Layout::Relative,
            hidden_dims: vec![64, 64, 32, 16],
            learning_rate: 1e-3,
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
            batch_size: 32,
            epochs: 100,
            threshold: 0.5,
            seed: 0,
            normalize: false,
            split_ratio: 0.8,
            split_mode: SplitMode::Frame,
        }
    }
}

impl TrainConfig {
    pub fn with_layout(layout: Layout) -> Self {
        TrainConfig {
            layout,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.threshold) {
            return Err(Error::Config(format!(
                "threshold {} must lie in (0, 1)",
                self.threshold
            )));
        }
        if !open_unit(self.split_ratio) {
            return Err(Error::Config(format!(
                "split ratio {} must lie in (0, 1)",
                self.split_ratio
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config("Adam epsilon must be positive".into()));
        }
        if self.hidden_dims.len() != super::HIDDEN_LAYERS || self.hidden_dims.contains(&0) {
            return Err(Error::Config(format!(
                "hidden sizes {:?} must be {} positive integers",
                self.hidden_dims,
                super::HIDDEN_LAYERS
            )));
        }
        Ok(())
    }
}

/// Result of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: MlpNetwork,
    /// Mean per-sample loss for each epoch, measured as batches were visited.
    pub history: Vec<f64>,
    pub optimizer_steps: u64,
}

/// Mini-batch Adam on mean BCE. Fully determined by `config.seed`.
pub fn train(train_set: &[(FeatureVector, u8)], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let first = train_set.first().ok_or(Error::Empty("training set"))?;
    let layout = first.0.layout();
    if layout != config.layout {
        return Err(Error::LayoutMismatch {
            expected: config.layout,
            found: layout,
        });
    }
    for (x, y) in train_set {
        if x.layout() != layout {
            return Err(Error::LayoutMismatch {
                expected: layout,
                found: x.layout(),
            });
        }
        if *y > 1 {
            return Err(Error::Config(format!("label {y} is not 0 or 1")));
        }
    }

    let mut net = init_network(layout, &config.hidden_dims, config.seed)?;
    let mut opt = OptimizerState::adam(
        &net,
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // separate stream from the one used for initialization
    rng.set_stream(1);

    let n = train_set.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let samples = chunk.iter().map(|&i| {
                let (x, y) = &train_set[i];
                (x.values(), *y)
            });
            let (grads, mean_loss) = accumulate(&net, samples, chunk.len());
            epoch_loss += mean_loss * chunk.len() as f64;
            opt.step(&mut net, &grads)?;
        }
        history.push(epoch_loss / n as f64);
    }
    Ok(TrainOutcome {
        network: net,
        history,
        optimizer_steps: opt.step_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub label: u8,
}

/// Probability plus the thresholded label; `p == threshold` counts as positive.
pub fn predict(net: &MlpNetwork, x: &FeatureVector, threshold: f64) -> Result<Prediction> {
    let probability = forward(net, x)?;
    Ok(Prediction {
        probability,
        label: threshold_label(probability, threshold),
    })
}

pub fn threshold_label(probability: f64, threshold: f64) -> u8 {
    u8::from(probability >= threshold)
}
