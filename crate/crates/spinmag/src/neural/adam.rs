//! Bias-corrected Adam updates for an [`Mlp`]'s parameters.

use nalgebra::{DMatrix, DVector};

use super::mlp::{Mlp, MlpGrads, NeuralError};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment accumulators matching one network's parameter shapes.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub step: u64,
    m_w: Vec<DMatrix<f64>>,
    v_w: Vec<DMatrix<f64>>,
    m_b: Vec<DVector<f64>>,
    v_b: Vec<DVector<f64>>,
}

impl AdamState {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        let z = net.zero_grads();
        Self {
            learning_rate,
            step: 0,
            m_w: z.weights.clone(),
            v_w: z.weights,
            m_b: z.biases.clone(),
            v_b: z.biases,
        }
    }

    /// One Adam step: updates `net` in place from `grads`.
    pub fn apply(&mut self, net: &mut Mlp, grads: &MlpGrads) -> Result<(), NeuralError> {
        if grads.weights.len() != net.weights.len() {
            return Err(NeuralError::GradientShape(grads.weights.len()));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        let lr = self.learning_rate;

        for l in 0..net.weights.len() {
            if grads.weights[l].shape() != net.weights[l].shape()
                || grads.biases[l].len() != net.biases[l].len()
            {
                return Err(NeuralError::GradientShape(l));
            }
            update(
                net.weights[l].as_mut_slice(),
                grads.weights[l].as_slice(),
                self.m_w[l].as_mut_slice(),
                self.v_w[l].as_mut_slice(),
                lr,
                bc1,
                bc2,
            );
            update(
                net.biases[l].as_mut_slice(),
                grads.biases[l].as_slice(),
                self.m_b[l].as_mut_slice(),
                self.v_b[l].as_mut_slice(),
                lr,
                bc1,
                bc2,
            );
        }
        Ok(())
    }

    pub fn moments(&self) -> (&[DMatrix<f64>], &[DMatrix<f64>], &[DVector<f64>], &[DVector<f64>]) {
        (&self.m_w, &self.v_w, &self.m_b, &self.v_b)
    }

    pub fn from_parts(
        learning_rate: f64,
        step: u64,
        m_w: Vec<DMatrix<f64>>,
        v_w: Vec<DMatrix<f64>>,
        m_b: Vec<DVector<f64>>,
        v_b: Vec<DVector<f64>>,
    ) -> Self {
        Self { learning_rate, step, m_w, v_w, m_b, v_b }
    }
}

fn update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_net() -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Mlp::init(&[1, 1], &mut rng).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut net = tiny_net();
        let before = net.clone();
        let mut adam = AdamState::new(&net, 1e-3);
        let grads = net.zero_grads();
        adam.apply(&mut net, &grads).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn first_step_with_unit_gradient_moves_by_learning_rate() {
        // Bias corrections cancel at t = 1: update = -lr / (1 + eps).
        let mut net = tiny_net();
        let w0 = net.weights[0][(0, 0)];
        let mut adam = AdamState::new(&net, 1e-3);
        let mut grads = net.zero_grads();
        grads.weights[0][(0, 0)] = 1.0;
        adam.apply(&mut net, &grads).unwrap();
        let delta = net.weights[0][(0, 0)] - w0;
        assert!((delta + 1e-3).abs() < 1e-9, "delta = {delta}");
    }

    #[test]
    fn constant_gradient_approaches_signed_learning_rate() {
        let mut net = tiny_net();
        let mut adam = AdamState::new(&net, 1e-3);
        let mut grads = net.zero_grads();
        grads.weights[0][(0, 0)] = 2.5;
        let mut prev = net.weights[0][(0, 0)];
        let mut last_delta = 0.0;
        for _ in 0..500 {
            adam.apply(&mut net, &grads).unwrap();
            last_delta = net.weights[0][(0, 0)] - prev;
            prev = net.weights[0][(0, 0)];
        }
        assert!((last_delta + 1e-3).abs() < 1e-5, "delta = {last_delta}");
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut net = tiny_net();
        let mut adam = AdamState::new(&net, 1e-3);
        let other = {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            Mlp::init(&[2, 3], &mut rng).unwrap()
        };
        let grads = other.zero_grads();
        assert!(adam.apply(&mut net, &grads).is_err());
    }
}
