//! Flat parameter-vector view.
//!
//! Stable ordering, relied on by the optimizer, the checkpoint format, and
//! the finite-difference tests:
//!
//! 1. LSTM gates in order input, forget, cell, output; within each gate the
//!    input weights (row-major), then recurrent weights (row-major), then
//!    the bias.
//! 2. Dense weights, then the dense bias.
//! 3. `extra` trailing scalars (the physics coefficients, when present).

use crate::num::Real;

use super::{DenseParams, GateBlock, LstmGrads, LstmParams, NnError};

/// Shape metadata for flattening and unflattening.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub input_size: usize,
    pub hidden_size: usize,
    pub extra: usize,
}

impl ParamLayout {
    pub fn new(input_size: usize, hidden_size: usize, extra: usize) -> Self {
        ParamLayout { input_size, hidden_size, extra }
    }

    fn gate_len(&self) -> usize {
        self.hidden_size * self.input_size + self.hidden_size * self.hidden_size + self.hidden_size
    }

    /// Total number of trainable scalars.
    pub fn len(&self) -> usize {
        4 * self.gate_len() + self.hidden_size + 1 + self.extra
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten<S: Real>(
        &self,
        lstm: &LstmParams<S>,
        dense: &DenseParams<S>,
        extra: &[S],
    ) -> Result<Vec<S>, NnError> {
        self.check(lstm, dense, extra.len())?;
        let mut flat = Vec::with_capacity(self.len());
        for gate in &lstm.gates {
            flat.extend_from_slice(&gate.w);
            flat.extend_from_slice(&gate.u);
            flat.extend_from_slice(&gate.b);
        }
        flat.extend_from_slice(&dense.weights);
        flat.push(dense.bias);
        flat.extend_from_slice(extra);
        Ok(flat)
    }

    /// Same ordering applied to a gradient accumulator.
    pub fn flatten_grads<S: Real>(
        &self,
        lstm: &LstmGrads<S>,
        dense_w: &[S],
        dense_b: S,
        extra: &[S],
    ) -> Vec<S> {
        let mut flat = Vec::with_capacity(self.len());
        for gate in &lstm.gates {
            flat.extend_from_slice(&gate.w);
            flat.extend_from_slice(&gate.u);
            flat.extend_from_slice(&gate.b);
        }
        flat.extend_from_slice(dense_w);
        flat.push(dense_b);
        flat.extend_from_slice(extra);
        flat
    }

    pub fn unflatten<S: Real>(
        &self,
        flat: &[S],
    ) -> Result<(LstmParams<S>, DenseParams<S>, Vec<S>), NnError> {
        if flat.len() != self.len() {
            return Err(NnError::ShapeMismatch {
                what: "flat parameter vector",
                expected: self.len(),
                got: flat.len(),
            });
        }
        let d = self.input_size;
        let h = self.hidden_size;
        let mut pos = 0;
        let mut take = |n: usize| {
            let slice = &flat[pos..pos + n];
            pos += n;
            slice.to_vec()
        };
        let gates = std::array::from_fn(|_| GateBlock {
            w: take(h * d),
            u: take(h * h),
            b: take(h),
        });
        let lstm = LstmParams { input_size: d, hidden_size: h, gates };
        let weights = take(h);
        let bias = take(1)[0];
        let extra = take(self.extra);
        Ok((lstm, DenseParams { weights, bias }, extra))
    }

    fn check<S: Real>(
        &self,
        lstm: &LstmParams<S>,
        dense: &DenseParams<S>,
        extra: usize,
    ) -> Result<(), NnError> {
        let ok = lstm.input_size == self.input_size
            && lstm.hidden_size == self.hidden_size
            && dense.weights.len() == self.hidden_size
            && extra == self.extra;
        if ok {
            Ok(())
        } else {
            Err(NnError::ShapeMismatch { what: "parameter layout", expected: self.len(), got: 0 })
        }
    }
}
