//! Adam with bias correction.

use crate::num::{real, Real};

use super::NnError;

/// Optimizer state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState<S> {
    m: Vec<S>,
    v: Vec<S>,
    step: u64,
    pub learning_rate: S,
    pub beta1: S,
    pub beta2: S,
    pub epsilon: S,
}

impl<S: Real> AdamState<S> {
    /// Fresh state with the standard moment decays (0.9, 0.999, eps 1e-8).
    pub fn new(len: usize, learning_rate: S) -> Self {
        AdamState {
            m: vec![S::zero(); len],
            v: vec![S::zero(); len],
            step: 0,
            learning_rate,
            beta1: real(0.9),
            beta2: real(0.999),
            epsilon: real(1e-8),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update: `p -= lr * m_hat / (sqrt(v_hat) + eps)` per coordinate.
    pub fn step(&mut self, params: &mut [S], grads: &[S]) -> Result<(), NnError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::ShapeMismatch {
                what: "adam parameter/gradient vector",
                expected: self.m.len(),
                got: params.len().max(grads.len()),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let one = S::one();
        let bc1 = one - self.beta1.powi(t);
        let bc2 = one - self.beta2.powi(t);
        for k in 0..params.len() {
            let g = grads[k];
            self.m[k] = self.beta1 * self.m[k] + (one - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (one - self.beta2) * g * g;
            let m_hat = self.m[k] / bc1;
            let v_hat = self.v[k] / bc2;
            params[k] = params[k] - self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}
