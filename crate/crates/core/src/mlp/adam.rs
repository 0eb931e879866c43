use serde::{Deserialize, Serialize};

use super::network::{Gradients, MlpNetwork};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
}

/// Adam moments and hyperparameters for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub step_count: u64,
    pub first_moment: Gradients,
    pub second_moment: Gradients,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    pub fn adam(
        net: &MlpNetwork,
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Self {
        OptimizerState {
            kind: OptimizerKind::Adam,
            step_count: 0,
            first_moment: Gradients::zeros_like(net),
            second_moment: Gradients::zeros_like(net),
            learning_rate,
            beta1,
            beta2,
            epsilon,
        }
    }

    /// In-place bias-corrected Adam step.
    pub fn step(&mut self, net: &mut MlpNetwork, grads: &Gradients) -> Result<()> {
        if !grads.matches(net)
            || !self.first_moment.matches(net)
            || !self.second_moment.matches(net)
        {
            return Err(Error::Shape(
                "gradients, optimizer moments and network disagree in shape".into(),
            ));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let correction1 = 1.0 - b1.powi(t);
        let correction2 = 1.0 - b2.powi(t);
        let (lr, eps) = (self.learning_rate, self.epsilon);

        let update = |param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64]| {
            for (((p, &g), m), v) in param.iter_mut().zip(grad).zip(m).zip(v) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / correction1;
                let v_hat = *v / correction2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };

        for (((layer, g), m), v) in net
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first_moment.layers)
            .zip(&mut self.second_moment.layers)
        {
            update(
                &mut layer.weights,
                &g.weights,
                &mut m.weights,
                &mut v.weights,
            );
            update(&mut layer.biases, &g.biases, &mut m.biases, &mut v.biases);
        }
        Ok(())
    }
}

/// Pure form of [`OptimizerState::step`]: returns the updated network and state.
pub fn apply_update(
    net: &MlpNetwork,
    grads: &Gradients,
    state: &OptimizerState,
) -> Result<(MlpNetwork, OptimizerState)> {
    let mut net = net.clone();
    let mut state = state.clone();
    state.step(&mut net, grads)?;
    Ok((net, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::Layout;
    use crate::mlp::network::{init_network, DenseLayer};

    fn net() -> MlpNetwork {
        init_network(Layout::Relative, &[6, 5, 4, 3], 9).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        let net = net();
        let state = OptimizerState::adam(&net, 1e-3, 0.9, 0.999, 1e-8);
        let (next, state2) = apply_update(&net, &Gradients::zeros_like(&net), &state).unwrap();
        assert_eq!(next, net);
        assert_eq!(state2.step_count, 1);
    }

    #[test]
    fn update_is_pure() {
        let net = net();
        let state = OptimizerState::adam(&net, 1e-3, 0.9, 0.999, 1e-8);
        let mut g = Gradients::zeros_like(&net);
        g.layers[2].weights[3] = 0.25;
        let a = apply_update(&net, &g, &state).unwrap();
        let b = apply_update(&net, &g, &state).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_scalar_matches_hand_computation() {
        let net = net();
        let state = OptimizerState::adam(&net, 1e-3, 0.9, 0.999, 1e-8);
        let mut g = Gradients::zeros_like(&net);
        g.layers[0].weights[0] = 0.5;
        let (next, state) = apply_update(&net, &g, &state).unwrap();
        // step 1: m = 0.05, v = 0.00025, m_hat = 0.5, v_hat = 0.25
        // delta = -1e-3 * 0.5 / (0.5 + 1e-8)
        let expected = -1e-3 * 0.5 / (0.5 + 1e-8);
        let delta = next.layers()[0].weights[0] - net.layers()[0].weights[0];
        assert!((delta - expected).abs() < 1e-16, "{delta} vs {expected}");
        for (i, (a, b)) in next.layers()[0]
            .weights
            .iter()
            .zip(&net.layers()[0].weights)
            .enumerate()
            .skip(1)
        {
            assert_eq!(a, b, "weight {i} moved");
        }

        // step 2 with g = -0.2:
        // m = 0.9*0.05 - 0.1*0.2 = 0.025, v = 0.999*0.00025 + 0.001*0.04 = 0.00028975
        // m_hat = 0.025/0.19 , v_hat = 0.00028975/0.001999
        g.layers[0].weights[0] = -0.2;
        let (after, state) = apply_update(&next, &g, &state).unwrap();
        let m_hat = 0.025 / 0.19;
        let v_hat = 0.00028975 / (1.0 - 0.999f64 * 0.999);
        let expected2 = -1e-3 * m_hat / (v_hat.sqrt() + 1e-8);
        let delta2 = after.layers()[0].weights[0] - next.layers()[0].weights[0];
        assert!(
            (delta2 - expected2).abs() < 1e-15,
            "{delta2} vs {expected2}"
        );
        assert_eq!(state.step_count, 2);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let net = net();
        let state = OptimizerState::adam(&net, 1e-3, 0.9, 0.999, 1e-8);
        let mut g = Gradients::zeros_like(&net);
        g.layers[1] = DenseLayer::zeros(3, 3);
        assert!(matches!(
            apply_update(&net, &g, &state),
            Err(Error::Shape(_))
        ));
    }
}
