//! Minimal recurrent network engine.
//!
//! A single-layer LSTM cell plus a scalar dense head, with hand-derived
//! reverse-mode gradients (backpropagation through time). The contract for
//! the backward pass is the central finite-difference check in the tests,
//! not the derivation itself.
//!
//! LSTM recursion per step, gates in the fixed order input/forget/cell/output:
//!
//! ```text
//! i = sigmoid(W_i x + U_i h + b_i)      g = tanh(W_g x + U_g h + b_g)
//! f = sigmoid(W_f x + U_f h + b_f)      o = sigmoid(W_o x + U_o h + b_o)
//! c' = f * c + i * g                    h' = o * tanh(c')
//! ```
//!
//! Initial `h` and `c` are zero vectors.

mod adam;
mod params;

pub use adam::AdamState;
pub use params::ParamLayout;

use rand::Rng;
use thiserror::Error;

use crate::num::{real, Real};
use crate::rng::chacha;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NnError {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    ShapeMismatch { what: &'static str, expected: usize, got: usize },
}

/// Gate index constants; the order is part of the parameter-vector layout.
pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_CELL: usize = 2;
pub const GATE_OUTPUT: usize = 3;

/// One gate's parameters: input weights, recurrent weights, bias.
#[derive(Debug, Clone, PartialEq)]
pub struct GateBlock<S> {
    /// hidden_size x input_size, row-major.
    pub w: Vec<S>,
    /// hidden_size x hidden_size, row-major.
    pub u: Vec<S>,
    /// hidden_size.
    pub b: Vec<S>,
}

impl<S: Real> GateBlock<S> {
    fn zeros(input_size: usize, hidden_size: usize) -> Self {
        GateBlock {
            w: vec![S::zero(); hidden_size * input_size],
            u: vec![S::zero(); hidden_size * hidden_size],
            b: vec![S::zero(); hidden_size],
        }
    }
}

/// Single-layer LSTM parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<S> {
    pub input_size: usize,
    pub hidden_size: usize,
    /// Blocks in gate order `[input, forget, cell, output]`.
    pub gates: [GateBlock<S>; 4],
}

impl<S: Real> LstmParams<S> {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        LstmParams {
            input_size,
            hidden_size,
            gates: std::array::from_fn(|_| GateBlock::zeros(input_size, hidden_size)),
        }
    }
}

/// Dense head mapping the final hidden state to a scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams<S> {
    pub weights: Vec<S>,
    pub bias: S,
}

impl<S: Real> DenseParams<S> {
    pub fn zeros(hidden_size: usize) -> Self {
        DenseParams { weights: vec![S::zero(); hidden_size], bias: S::zero() }
    }
}

/// Numerically stable logistic sigmoid.
#[inline]
pub fn sigmoid<S: Real>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmTrace<S> {
    steps: usize,
    hidden_size: usize,
    inputs: Vec<S>,
    gate_i: Vec<S>,
    gate_f: Vec<S>,
    gate_g: Vec<S>,
    gate_o: Vec<S>,
    cell: Vec<S>,
    cell_tanh: Vec<S>,
    hidden: Vec<S>,
}

impl<S: Real> LstmTrace<S> {
    /// Hidden state after step `t` (zeros for the state before step 0).
    fn hidden_before(&self, t: usize) -> Option<&[S]> {
        if t == 0 {
            None
        } else {
            Some(&self.hidden[(t - 1) * self.hidden_size..t * self.hidden_size])
        }
    }

    fn cell_before(&self, t: usize, j: usize) -> S {
        if t == 0 {
            S::zero()
        } else {
            self.cell[(t - 1) * self.hidden_size + j]
        }
    }
}

/// Gradients with the same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct LstmGrads<S> {
    pub gates: [GateBlock<S>; 4],
}

/// Runs the LSTM over `sequence` (flat, `steps * input_size` values).
///
/// Returns the final hidden state and the trace needed by
/// [`lstm_backward`]. An empty sequence returns the zero initial state.
pub fn lstm_forward<S: Real>(
    params: &LstmParams<S>,
    sequence: &[S],
) -> Result<(Vec<S>, LstmTrace<S>), NnError> {
    let d = params.input_size;
    let h = params.hidden_size;
    if d == 0 || sequence.len() % d != 0 {
        return Err(NnError::ShapeMismatch {
            what: "lstm input sequence",
            expected: d.max(1),
            got: sequence.len(),
        });
    }
    let steps = sequence.len() / d;

    let mut trace = LstmTrace {
        steps,
        hidden_size: h,
        inputs: sequence.to_vec(),
        gate_i: vec![S::zero(); steps * h],
        gate_f: vec![S::zero(); steps * h],
        gate_g: vec![S::zero(); steps * h],
        gate_o: vec![S::zero(); steps * h],
        cell: vec![S::zero(); steps * h],
        cell_tanh: vec![S::zero(); steps * h],
        hidden: vec![S::zero(); steps * h],
    };

    let mut h_prev = vec![S::zero(); h];
    let mut c_prev = vec![S::zero(); h];

    for t in 0..steps {
        let x = &sequence[t * d..(t + 1) * d];
        for j in 0..h {
            let mut pre = [S::zero(); 4];
            for (gi, gate) in params.gates.iter().enumerate() {
                let mut acc = gate.b[j];
                let wrow = &gate.w[j * d..(j + 1) * d];
                for (wk, xk) in wrow.iter().zip(x) {
                    acc += *wk * *xk;
                }
                let urow = &gate.u[j * h..(j + 1) * h];
                for (uk, hk) in urow.iter().zip(&h_prev) {
                    acc += *uk * *hk;
                }
                pre[gi] = acc;
            }
            let i = sigmoid(pre[GATE_INPUT]);
            let f = sigmoid(pre[GATE_FORGET]);
            let g = pre[GATE_CELL].tanh();
            let o = sigmoid(pre[GATE_OUTPUT]);
            let c = f * c_prev[j] + i * g;
            let ct = c.tanh();
            let idx = t * h + j;
            trace.gate_i[idx] = i;
            trace.gate_f[idx] = f;
            trace.gate_g[idx] = g;
            trace.gate_o[idx] = o;
            trace.cell[idx] = c;
            trace.cell_tanh[idx] = ct;
            trace.hidden[idx] = o * ct;
        }
        h_prev.copy_from_slice(&trace.hidden[t * h..(t + 1) * h]);
        c_prev.copy_from_slice(&trace.cell[t * h..(t + 1) * h]);
    }

    Ok((h_prev, trace))
}

/// Backpropagation through time.
///
/// `d_h_final` is the loss gradient with respect to the final hidden state.
/// Gradients are accumulated into `grads` so batches can share one buffer.
pub fn lstm_backward<S: Real>(
    params: &LstmParams<S>,
    trace: &LstmTrace<S>,
    d_h_final: &[S],
    grads: &mut LstmGrads<S>,
) -> Result<(), NnError> {
    let h = params.hidden_size;
    let d = params.input_size;
    if d_h_final.len() != h {
        return Err(NnError::ShapeMismatch {
            what: "lstm output gradient",
            expected: h,
            got: d_h_final.len(),
        });
    }
    if trace.steps == 0 {
        return Ok(());
    }

    let one = S::one();
    let mut d_h = d_h_final.to_vec();
    let mut d_c = vec![S::zero(); h];
    let mut dz = [
        vec![S::zero(); h],
        vec![S::zero(); h],
        vec![S::zero(); h],
        vec![S::zero(); h],
    ];

    for t in (0..trace.steps).rev() {
        let base = t * h;
        for j in 0..h {
            let i = trace.gate_i[base + j];
            let f = trace.gate_f[base + j];
            let g = trace.gate_g[base + j];
            let o = trace.gate_o[base + j];
            let ct = trace.cell_tanh[base + j];
            let c_prev = trace.cell_before(t, j);

            let d_o = d_h[j] * ct;
            let d_c_total = d_c[j] + d_h[j] * o * (one - ct * ct);
            let d_i = d_c_total * g;
            let d_g = d_c_total * i;
            let d_f = d_c_total * c_prev;

            dz[GATE_INPUT][j] = d_i * i * (one - i);
            dz[GATE_FORGET][j] = d_f * f * (one - f);
            dz[GATE_CELL][j] = d_g * (one - g * g);
            dz[GATE_OUTPUT][j] = d_o * o * (one - o);
            d_c[j] = d_c_total * f;
        }

        let x = &trace.inputs[t * d..(t + 1) * d];
        let h_prev = trace.hidden_before(t);

        // Parameter gradients and the recurrent gradient into h_{t-1}.
        let mut d_h_prev = vec![S::zero(); h];
        for gi in 0..4 {
            let gate = &params.gates[gi];
            let grad = &mut grads.gates[gi];
            for j in 0..h {
                let dzj = dz[gi][j];
                if dzj == S::zero() {
                    continue;
                }
                let wrow = &mut grad.w[j * d..(j + 1) * d];
                for (wk, xk) in wrow.iter_mut().zip(x) {
                    *wk += dzj * *xk;
                }
                if let Some(hp) = h_prev {
                    let urow = &mut grad.u[j * h..(j + 1) * h];
                    for (uk, hk) in urow.iter_mut().zip(hp) {
                        *uk += dzj * *hk;
                    }
                    let urow = &gate.u[j * h..(j + 1) * h];
                    for (dk, uk) in d_h_prev.iter_mut().zip(urow) {
                        *dk += dzj * *uk;
                    }
                }
                grad.b[j] += dzj;
            }
        }
        d_h = d_h_prev;
    }
    Ok(())
}

impl<S: Real> LstmGrads<S> {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        LstmGrads { gates: std::array::from_fn(|_| GateBlock::zeros(input_size, hidden_size)) }
    }
}

/// `dot(weights, h) + bias`.
pub fn dense_forward<S: Real>(params: &DenseParams<S>, hidden: &[S]) -> Result<S, NnError> {
    if hidden.len() != params.weights.len() {
        return Err(NnError::ShapeMismatch {
            what: "dense input",
            expected: params.weights.len(),
            got: hidden.len(),
        });
    }
    let mut acc = params.bias;
    for (w, h) in params.weights.iter().zip(hidden) {
        acc += *w * *h;
    }
    Ok(acc)
}

/// Deterministic weight init: uniform in +-1/sqrt(fan_in), biases zero except
/// the forget gate bias which starts at 1.
pub fn init_params<S: Real>(
    seed: u64,
    input_size: usize,
    hidden_size: usize,
) -> (LstmParams<S>, DenseParams<S>) {
    let mut rng = chacha(seed);
    let mut lstm = LstmParams::zeros(input_size, hidden_size);
    let w_bound = 1.0 / (input_size as f64).sqrt();
    let u_bound = 1.0 / (hidden_size as f64).sqrt();
    for (gi, gate) in lstm.gates.iter_mut().enumerate() {
        for w in gate.w.iter_mut() {
            *w = real(rng.gen_range(-w_bound..w_bound));
        }
        for u in gate.u.iter_mut() {
            *u = real(rng.gen_range(-u_bound..u_bound));
        }
        if gi == GATE_FORGET {
            for b in gate.b.iter_mut() {
                *b = S::one();
            }
        }
    }
    let mut dense = DenseParams::zeros(hidden_size);
    for w in dense.weights.iter_mut() {
        *w = real(rng.gen_range(-u_bound..u_bound));
    }
    (lstm, dense)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_give_zero_hidden_state() {
        // With all-zero parameters every gate is sigmoid(0) = 0.5 and the
        // candidate is tanh(0) = 0, so c stays 0 and h = 0.5 * tanh(0) = 0.
        let params: LstmParams<f64> = LstmParams::zeros(4, 3);
        let seq = vec![1.0, -2.0, 0.5, 3.0, 0.1, 0.2, 0.3, 0.4];
        let (h, _) = lstm_forward(&params, &seq).unwrap();
        assert_eq!(h, vec![0.0; 3]);
    }

    #[test]
    fn empty_sequence_returns_initial_state() {
        let (lstm, _) = init_params::<f64>(1, 4, 3);
        let (h, trace) = lstm_forward(&lstm, &[]).unwrap();
        assert_eq!(h, vec![0.0; 3]);
        assert_eq!(trace.steps, 0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let params: LstmParams<f64> = LstmParams::zeros(4, 3);
        let err = lstm_forward(&params, &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, NnError::ShapeMismatch { .. }));
    }

    /// Pencil-and-paper rollout for hidden size 1, input size 1: the same
    /// recursion written as straight-line scalar code.
    #[test]
    fn hand_rollout_hidden_one() {
        let mut params: LstmParams<f64> = LstmParams::zeros(1, 1);
        let (wi, ui, bi) = (0.1, 0.2, 0.05);
        let (wf, uf, bf) = (-0.3, 0.1, 1.0);
        let (wg, ug, bg) = (0.7, 0.3, -0.1);
        let (wo, uo, bo) = (0.4, -0.2, 0.0);
        params.gates[GATE_INPUT] = GateBlock { w: vec![wi], u: vec![ui], b: vec![bi] };
        params.gates[GATE_FORGET] = GateBlock { w: vec![wf], u: vec![uf], b: vec![bf] };
        params.gates[GATE_CELL] = GateBlock { w: vec![wg], u: vec![ug], b: vec![bg] };
        params.gates[GATE_OUTPUT] = GateBlock { w: vec![wo], u: vec![uo], b: vec![bo] };

        let xs = [1.0, -0.5];
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let (mut hh, mut cc) = (0.0f64, 0.0f64);
        for x in xs {
            let i = sig(wi * x + ui * hh + bi);
            let f = sig(wf * x + uf * hh + bf);
            let g = (wg * x + ug * hh + bg).tanh();
            let o = sig(wo * x + uo * hh + bo);
            cc = f * cc + i * g;
            hh = o * cc.tanh();
        }

        let (h, _) = lstm_forward(&params, &xs).unwrap();
        assert!((h[0] - hh).abs() < 1e-15, "{} vs {}", h[0], hh);
    }

    #[test]
    fn dense_zero_weights_returns_bias() {
        let params = DenseParams { weights: vec![0.0; 4], bias: 3.0 };
        assert_eq!(dense_forward(&params, &[9.0, 8.0, 7.0, 6.0]).unwrap(), 3.0);
    }

    #[test]
    fn dense_unit_weight_selects_component() {
        let params = DenseParams { weights: vec![1.0, 0.0, 0.0], bias: 0.25 };
        assert_eq!(dense_forward(&params, &[5.0, -1.0, 2.0]).unwrap(), 5.25);
    }

    #[test]
    fn dense_matches_independent_dot_product() {
        let mut rng = chacha(8);
        use rand::Rng;
        let weights: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bias = rng.gen_range(-1.0..1.0);
        let params = DenseParams { weights: weights.clone(), bias };
        let mut expect = bias;
        for k in 0..16 {
            expect += weights[k] * h[k];
        }
        assert!((dense_forward(&params, &h).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let (a_lstm, a_dense) = init_params::<f64>(7, 4, 16);
        let (b_lstm, b_dense) = init_params::<f64>(7, 4, 16);
        assert_eq!(a_lstm, b_lstm);
        assert_eq!(a_dense, b_dense);

        let w_bound = 1.0 / 2.0; // 1/sqrt(4)
        let u_bound = 1.0 / 4.0; // 1/sqrt(16)
        for gate in &a_lstm.gates {
            assert!(gate.w.iter().all(|w| w.abs() < w_bound));
            assert!(gate.u.iter().all(|u| u.abs() < u_bound));
        }
        assert_eq!(a_lstm.gates[GATE_FORGET].b, vec![1.0; 16]);
        assert_eq!(a_lstm.gates[GATE_INPUT].b, vec![0.0; 16]);
    }

    #[test]
    fn init_weight_mean_is_near_zero() {
        // 10^4 weights uniform in +-b have mean 0 with SE b/sqrt(3n).
        let hidden = 50;
        let (lstm, _) = init_params::<f64>(12, 50, hidden);
        let weights: Vec<f64> = lstm.gates.iter().flat_map(|g| g.w.iter().copied()).collect();
        assert!(weights.len() >= 10_000);
        let bound = 1.0 / (50.0f64).sqrt();
        let mean = weights.iter().sum::<f64>() / weights.len() as f64;
        let se = bound / (3.0 * weights.len() as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn hidden_state_is_bounded_by_one() {
        let (lstm, _) = init_params::<f64>(3, 4, 8);
        let mut rng = chacha(99);
        use rand::Rng;
        for _ in 0..50 {
            let seq: Vec<f64> = (0..24).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let (h, _) = lstm_forward(&lstm, &seq).unwrap();
            assert!(h.iter().all(|v| v.abs() < 1.0));
        }
    }

    #[test]
    fn forward_runs_in_f32() {
        let (lstm, dense) = init_params::<f32>(5, 4, 8);
        let seq = vec![0.5f32; 8];
        let (h, _) = lstm_forward(&lstm, &seq).unwrap();
        let y = dense_forward(&dense, &h).unwrap();
        assert!(y.is_finite());
    }
}
