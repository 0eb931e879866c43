//! From-scratch MLP classifier: ReLU hidden stack, sigmoid output, BCE loss,
//! manual backpropagation and Adam.

mod adam;
mod network;
mod train;

pub use adam::{apply_update, OptimizerKind, OptimizerState};
pub use network::{
    backward, batch_loss, bce_loss, forward, init_network, sigmoid, DenseLayer, Gradients,
    MlpNetwork, HIDDEN_LAYERS, PROB_EPS,
};
pub use train::{predict, threshold_label, train, Prediction, TrainConfig, TrainOutcome};
