use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::{FeatureVector, Layout};

/// Number of hidden layers the classifier is built with.
pub const HIDDEN_LAYERS: usize = 4;

/// Probability clamp used by the output and the loss, so that `ln` stays finite.
pub const PROB_EPS: f64 = 1e-12;

/// One affine map `z = W a + b`. `weights` is `fan_out × fan_in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        DenseLayer {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.fan_in + col]
    }

    fn affine_into(&self, input: &[f64], out: &mut [f64]) {
        for (r, (o, b)) in out.iter_mut().zip(&self.biases).enumerate() {
            let row = &self.weights[r * self.fan_in..(r + 1) * self.fan_in];
            *o = b + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
        }
    }

    fn same_shape(&self, other: &DenseLayer) -> bool {
        self.fan_in == other.fan_in
            && self.fan_out == other.fan_out
            && self.weights.len() == other.weights.len()
            && self.biases.len() == other.biases.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

/// Gradients (or any per-parameter quantity) shaped like a network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    pub fn zeros_like(net: &MlpNetwork) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.fan_in, l.fan_out))
                .collect(),
        }
    }

    pub fn matches(&self, net: &MlpNetwork) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(&net.layers)
                .all(|(g, l)| g.same_shape(l))
    }

    /// Flat view, layer by layer: weights then biases.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }
}

/// Feed-forward classifier: four ReLU hidden layers and a sigmoid output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    layout: Layout,
    layer_dims: Vec<usize>,
    layers: Vec<DenseLayer>,
    seed: u64,
}

impl MlpNetwork {
    /// Assembles a network from explicit layers, checking every shape.
    pub fn from_layers(layout: Layout, layers: Vec<DenseLayer>, seed: u64) -> Result<Self> {
        if layers.len() != HIDDEN_LAYERS + 1 {
            return Err(Error::Shape(format!(
                "expected {} dense layers, got {}",
                HIDDEN_LAYERS + 1,
                layers.len()
            )));
        }
        let mut layer_dims = vec![layers[0].fan_in];
        for (i, l) in layers.iter().enumerate() {
            if l.fan_in == 0 || l.fan_out == 0 {
                return Err(Error::Shape(format!("layer {i} has a zero dimension")));
            }
            if l.weights.len() != l.fan_in * l.fan_out || l.biases.len() != l.fan_out {
                return Err(Error::Shape(format!(
                    "layer {i}: {} weights / {} biases do not fit {}x{}",
                    l.weights.len(),
                    l.biases.len(),
                    l.fan_out,
                    l.fan_in
                )));
            }
            if l.fan_in != *layer_dims.last().unwrap() {
                return Err(Error::Shape(format!(
                    "layer {i} expects {} inputs but previous layer emits {}",
                    l.fan_in,
                    layer_dims.last().unwrap()
                )));
            }
            layer_dims.push(l.fan_out);
        }
        if layer_dims[0] != layout.len() {
            return Err(Error::Shape(format!(
                "{layout} input needs {} units, network has {}",
                layout.len(),
                layer_dims[0]
            )));
        }
        if *layer_dims.last().unwrap() != 1 {
            return Err(Error::Shape(
                "output layer must have exactly one unit".into(),
            ));
        }
        Ok(MlpNetwork {
            layout,
            layer_dims,
            layers,
            seed,
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::num_params).sum()
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    fn check_input(&self, x: &FeatureVector) -> Result<()> {
        if x.layout() != self.layout {
            return Err(Error::LayoutMismatch {
                expected: self.layout,
                found: x.layout(),
            });
        }
        Ok(())
    }

    /// Pre-sigmoid output.
    pub fn logit(&self, x: &FeatureVector) -> Result<f64> {
        self.check_input(x)?;
        let mut scratch = Scratch::new(self);
        Ok(self.forward_raw(x.values(), &mut scratch))
    }

    /// Fills `scratch` with every layer's activations and returns the logit.
    fn forward_raw(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        scratch.acts[0].copy_from_slice(x);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let (before, after) = scratch.acts.split_at_mut(i + 1);
            let out = &mut after[0];
            layer.affine_into(&before[i], out);
            if i < last {
                for v in out.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
        scratch.acts[last + 1][0]
    }
}

/// Per-layer activation buffers, reused across samples.
struct Scratch {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(net: &MlpNetwork) -> Self {
        Scratch {
            acts: net.layer_dims.iter().map(|&d| vec![0.0; d]).collect(),
            deltas: net.layer_dims.iter().map(|&d| vec![0.0; d]).collect(),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Builds a network with weights uniform in `±1/√fan_in` and zero biases.
pub fn init_network(layout: Layout, hidden_dims: &[usize], seed: u64) -> Result<MlpNetwork> {
    if hidden_dims.len() != HIDDEN_LAYERS {
        return Err(Error::Config(format!(
            "expected {HIDDEN_LAYERS} hidden layer sizes, got {}",
            hidden_dims.len()
        )));
    }
    if hidden_dims.contains(&0) {
        return Err(Error::Config("hidden layer sizes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims = vec![layout.len()];
    dims.extend_from_slice(hidden_dims);
    dims.push(1);
    let layers = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            DenseLayer {
                fan_in,
                fan_out,
                weights,
                biases: vec![0.0; fan_out],
            }
        })
        .collect();
    MlpNetwork::from_layers(layout, layers, seed)
}

/// Handover probability for one vector, strictly inside (0, 1).
pub fn forward(net: &MlpNetwork, x: &FeatureVector) -> Result<f64> {
    Ok(clamp_prob(sigmoid(net.logit(x)?)))
}

/// Binary cross-entropy with the probability clamped to `[ε, 1 − ε]`.
pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = clamp_prob(p);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

fn check_batch(net: &MlpNetwork, batch: &[(FeatureVector, u8)]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    for (x, y) in batch {
        net.check_input(x)?;
        if *y > 1 {
            return Err(Error::Config(format!("label {y} is not 0 or 1")));
        }
    }
    Ok(())
}

/// Mean BCE over a batch.
pub fn batch_loss(net: &MlpNetwork, batch: &[(FeatureVector, u8)]) -> Result<f64> {
    check_batch(net, batch)?;
    let mut scratch = Scratch::new(net);
    let total: f64 = batch
        .iter()
        .map(|(x, y)| bce_loss(sigmoid(net.forward_raw(x.values(), &mut scratch)), *y))
        .sum();
    Ok(total / batch.len() as f64)
}

/// Gradient of the mean BCE over `batch` with respect to every parameter.
pub fn backward(net: &MlpNetwork, batch: &[(FeatureVector, u8)]) -> Result<Gradients> {
    check_batch(net, batch)?;
    let (grads, _) = accumulate(
        net,
        batch.iter().map(|(x, y)| (x.values(), *y)),
        batch.len(),
    );
    Ok(grads)
}

/// Backprop over `n` samples; returns the mean-loss gradient and mean loss.
pub(crate) fn accumulate<'a>(
    net: &MlpNetwork,
    samples: impl Iterator<Item = (&'a [f64], u8)>,
    n: usize,
) -> (Gradients, f64) {
    let mut grads = Gradients::zeros_like(net);
    let mut scratch = Scratch::new(net);
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let n_layers = net.layers.len();
    for (x, y) in samples {
        let z = net.forward_raw(x, &mut scratch);
        let p = sigmoid(z);
        loss += bce_loss(p, y);
        // d(mean BCE)/d(logit) for the sigmoid-BCE pair
        scratch.deltas[n_layers][0] = (p - f64::from(y)) * inv_n;
        for l in (0..n_layers).rev() {
            let layer = &net.layers[l];
            let g = &mut grads.layers[l];
            let (lower, upper) = scratch.deltas.split_at_mut(l + 1);
            let delta = &upper[0];
            let input = &scratch.acts[l];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[r] += d;
                let row = &mut g.weights[r * layer.fan_in..(r + 1) * layer.fan_in];
                for (gw, a) in row.iter_mut().zip(input) {
                    *gw += d * a;
                }
            }
            if l == 0 {
                break;
            }
            // propagate through W^T and the ReLU that produced `input`
            let prev = &mut lower[l];
            prev.iter_mut().for_each(|v| *v = 0.0);
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[r * layer.fan_in..(r + 1) * layer.fan_in];
                for (pv, w) in prev.iter_mut().zip(row) {
                    *pv += d * w;
                }
            }
            for (pv, a) in prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *pv = 0.0;
                }
            }
        }
    }
    (grads, loss * inv_n)
}
