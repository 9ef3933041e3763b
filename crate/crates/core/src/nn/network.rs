//! Forward pass and reverse-mode gradients of the LSTM→dense stack.

use super::kernels::{col_sum_acc, matmul_nn_acc, matmul_nt_acc, matmul_tn_acc};
use super::{Architecture, DenseSlots, LstmSlots, NnError, Result};

/// Probability clamp used by the loss.
pub const BCE_EPSILON: f64 = 1e-7;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `min(1, max(0, 0.2x + 0.5))`.
pub fn hard_sigmoid(x: f64) -> f64 {
    (0.2 * x + 0.5).clamp(0.0, 1.0)
}

fn hard_sigmoid_grad(x: f64) -> f64 {
    let y = 0.2 * x + 0.5;
    if y > 0.0 && y < 1.0 {
        0.2
    } else {
        0.0
    }
}

/// Binary cross-entropy with the probability clamped to `[ε, 1-ε]`.
pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// d(bce)/dp evaluated at the clamped probability.
fn bce_grad(p: f64, y: u8) -> f64 {
    let p = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
    if y == 1 {
        -1.0 / p
    } else {
        1.0 / (1.0 - p)
    }
}

/// Activations of one LSTM layer over a batch, one entry per time step.
struct LstmTape {
    /// Inputs, `batch × input`.
    xs: Vec<Vec<f64>>,
    /// Post-nonlinearity gates, `batch × 4·units`, blocks i, f, g, o.
    gates: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    tanh_cells: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
}

fn lstm_forward(params: &[f64], slots: &LstmSlots, xs: Vec<Vec<f64>>, batch: usize) -> LstmTape {
    let u = slots.units;
    let kernel = &params[slots.kernel.clone()];
    let recurrent = &params[slots.recurrent.clone()];
    let bias = &params[slots.bias.clone()];
    let steps = xs.len();
    let mut tape = LstmTape {
        xs: Vec::with_capacity(steps),
        gates: Vec::with_capacity(steps),
        cells: Vec::with_capacity(steps),
        tanh_cells: Vec::with_capacity(steps),
        hidden: Vec::with_capacity(steps),
    };
    for x in xs {
        let mut z: Vec<f64> = bias.iter().copied().cycle().take(batch * 4 * u).collect();
        matmul_nt_acc(&mut z, &x, kernel, batch, slots.input);
        if let Some(h_prev) = tape.hidden.last() {
            matmul_nt_acc(&mut z, h_prev, recurrent, batch, u);
        }
        let mut c = vec![0.0; batch * u];
        let mut tc = vec![0.0; batch * u];
        let mut h = vec![0.0; batch * u];
        for b in 0..batch {
            let zb = &mut z[b * 4 * u..(b + 1) * 4 * u];
            for (j, v) in zb.iter_mut().enumerate() {
                *v = if (2 * u..3 * u).contains(&j) {
                    v.tanh()
                } else {
                    sigmoid(*v)
                };
            }
            for j in 0..u {
                let (i, f, g, o) = (zb[j], zb[u + j], zb[2 * u + j], zb[3 * u + j]);
                let c_prev = tape.cells.last().map_or(0.0, |cp| cp[b * u + j]);
                let cj = f * c_prev + i * g;
                let tcj = cj.tanh();
                c[b * u + j] = cj;
                tc[b * u + j] = tcj;
                h[b * u + j] = o * tcj;
            }
        }
        tape.xs.push(x);
        tape.gates.push(z);
        tape.cells.push(c);
        tape.tanh_cells.push(tc);
        tape.hidden.push(h);
    }
    tape
}

/// Backpropagation through time. `dh_in[t]` is the upstream gradient on
/// the hidden state at step `t`. Accumulates parameter gradients into
/// `grad`; returns input gradients per step when `want_dx`.
fn lstm_backward(
    params: &[f64],
    slots: &LstmSlots,
    tape: &LstmTape,
    dh_in: &[Option<Vec<f64>>],
    batch: usize,
    grad: &mut [f64],
    want_dx: bool,
) -> Vec<Vec<f64>> {
    let u = slots.units;
    let kernel = &params[slots.kernel.clone()];
    let recurrent = &params[slots.recurrent.clone()];
    let steps = tape.xs.len();
    let mut dh_next = vec![0.0; batch * u];
    let mut dc_next = vec![0.0; batch * u];
    let mut dxs = vec![Vec::new(); if want_dx { steps } else { 0 }];
    let mut dz = vec![0.0; batch * 4 * u];
    for t in (0..steps).rev() {
        let gates = &tape.gates[t];
        let tc = &tape.tanh_cells[t];
        for b in 0..batch {
            for j in 0..u {
                let idx = b * u + j;
                let gb = &gates[b * 4 * u..(b + 1) * 4 * u];
                let (i, f, g, o) = (gb[j], gb[u + j], gb[2 * u + j], gb[3 * u + j]);
                let dh = dh_next[idx] + dh_in[t].as_ref().map_or(0.0, |d| d[idx]);
                let c_prev = if t > 0 { tape.cells[t - 1][idx] } else { 0.0 };
                let do_ = dh * tc[idx];
                let dc = dc_next[idx] + dh * o * (1.0 - tc[idx] * tc[idx]);
                let di = dc * g;
                let dg = dc * i;
                let df = dc * c_prev;
                dc_next[idx] = dc * f;
                let dzb = &mut dz[b * 4 * u..(b + 1) * 4 * u];
                dzb[j] = di * i * (1.0 - i);
                dzb[u + j] = df * f * (1.0 - f);
                dzb[2 * u + j] = dg * (1.0 - g * g);
                dzb[3 * u + j] = do_ * o * (1.0 - o);
            }
        }
        matmul_tn_acc(&mut grad[slots.kernel.clone()], &dz, &tape.xs[t], batch, slots.input);
        if t > 0 {
            matmul_tn_acc(
                &mut grad[slots.recurrent.clone()],
                &dz,
                &tape.hidden[t - 1],
                batch,
                u,
            );
        }
        col_sum_acc(&mut grad[slots.bias.clone()], &dz);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        matmul_nn_acc(&mut dh_next, &dz, recurrent, batch, u);
        if want_dx {
            let mut dx = vec![0.0; batch * slots.input];
            matmul_nn_acc(&mut dx, &dz, kernel, batch, slots.input);
            dxs[t] = dx;
        }
    }
    dxs
}

fn dense_forward(params: &[f64], slots: &DenseSlots, x: &[f64], batch: usize) -> Vec<f64> {
    let bias = &params[slots.bias.clone()];
    let mut out: Vec<f64> = bias.iter().copied().cycle().take(batch * slots.units).collect();
    matmul_nt_acc(&mut out, x, &params[slots.kernel.clone()], batch, slots.input);
    out
}

fn dense_backward(
    params: &[f64],
    slots: &DenseSlots,
    x: &[f64],
    da: &[f64],
    batch: usize,
    grad: &mut [f64],
) -> Vec<f64> {
    matmul_tn_acc(&mut grad[slots.kernel.clone()], da, x, batch, slots.input);
    col_sum_acc(&mut grad[slots.bias.clone()], da);
    let mut dx = vec![0.0; batch * slots.input];
    matmul_nn_acc(&mut dx, da, &params[slots.kernel.clone()], batch, slots.input);
    dx
}

struct Tape {
    lstm1: LstmTape,
    lstm2: LstmTape,
    dense1: Vec<f64>,
    dense2: Vec<f64>,
    logits: Vec<f64>,
    probs: Vec<f64>,
}

fn check_shapes(arch: &Architecture, params: &[f64], inputs: &[f64]) -> Result<usize> {
    if params.len() != arch.param_count() {
        return Err(NnError::ShapeMismatch {
            expected: arch.param_count(),
            got: params.len(),
        });
    }
    let per = arch.input_len();
    if inputs.is_empty() || inputs.len() % per != 0 {
        return Err(NnError::ShapeMismatch {
            expected: per,
            got: inputs.len(),
        });
    }
    Ok(inputs.len() / per)
}

fn run(arch: &Architecture, params: &[f64], inputs: &[f64], batch: usize) -> Tape {
    let layout = arch.layout();
    let (steps, dim) = (arch.input_steps, arch.input_dim);
    // Regroup `batch × steps × dim` into per-step `batch × dim` blocks.
    let xs: Vec<Vec<f64>> = (0..steps)
        .map(|t| {
            let mut x = Vec::with_capacity(batch * dim);
            for b in 0..batch {
                let start = (b * steps + t) * dim;
                x.extend_from_slice(&inputs[start..start + dim]);
            }
            x
        })
        .collect();
    let lstm1 = lstm_forward(params, &layout.lstm1, xs, batch);
    let lstm2 = lstm_forward(params, &layout.lstm2, lstm1.hidden.clone(), batch);
    let last = lstm2.hidden.last().expect("at least one step");
    let mut dense1 = dense_forward(params, &layout.dense1, last, batch);
    dense1.iter_mut().for_each(|v| *v = v.tanh());
    let mut dense2 = dense_forward(params, &layout.dense2, &dense1, batch);
    dense2.iter_mut().for_each(|v| *v = sigmoid(*v));
    let logits = dense_forward(params, &layout.dense3, &dense2, batch);
    let probs = logits.iter().map(|&a| hard_sigmoid(a)).collect();
    Tape {
        lstm1,
        lstm2,
        dense1,
        dense2,
        logits,
        probs,
    }
}

/// Set-1 membership probabilities for a batch of sequences laid out
/// `batch × steps × dim`.
pub fn forward_batch(arch: &Architecture, params: &[f64], inputs: &[f64]) -> Result<Vec<f64>> {
    let batch = check_shapes(arch, params, inputs)?;
    Ok(run(arch, params, inputs, batch).probs)
}

/// Mean binary cross-entropy over the batch and its gradient with respect
/// to every parameter.
pub fn loss_and_gradient(
    arch: &Architecture,
    params: &[f64],
    inputs: &[f64],
    labels: &[u8],
) -> Result<(f64, Vec<f64>)> {
    let batch = check_shapes(arch, params, inputs)?;
    if labels.len() != batch {
        return Err(NnError::ShapeMismatch {
            expected: batch,
            got: labels.len(),
        });
    }
    let layout = arch.layout();
    let tape = run(arch, params, inputs, batch);
    let scale = 1.0 / batch as f64;
    let loss = tape
        .probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| bce_loss(p, y))
        .sum::<f64>()
        * scale;

    let mut grad = vec![0.0; params.len()];
    let d_logits: Vec<f64> = tape
        .probs
        .iter()
        .zip(&tape.logits)
        .zip(labels)
        .map(|((&p, &a), &y)| scale * bce_grad(p, y) * hard_sigmoid_grad(a))
        .collect();
    let mut d = dense_backward(params, &layout.dense3, &tape.dense2, &d_logits, batch, &mut grad);
    for (g, y) in d.iter_mut().zip(&tape.dense2) {
        *g *= y * (1.0 - y);
    }
    let mut d = dense_backward(params, &layout.dense2, &tape.dense1, &d, batch, &mut grad);
    for (g, y) in d.iter_mut().zip(&tape.dense1) {
        *g *= 1.0 - y * y;
    }
    let last = tape.lstm2.hidden.last().expect("at least one step");
    let d_last = dense_backward(params, &layout.dense1, last, &d, batch, &mut grad);

    let steps = arch.input_steps;
    let mut dh2: Vec<Option<Vec<f64>>> = vec![None; steps];
    dh2[steps - 1] = Some(d_last);
    let dh1 = lstm_backward(params, &layout.lstm2, &tape.lstm2, &dh2, batch, &mut grad, true);
    let dh1: Vec<Option<Vec<f64>>> = dh1.into_iter().map(Some).collect();
    lstm_backward(params, &layout.lstm1, &tape.lstm1, &dh1, batch, &mut grad, false);
    Ok((loss, grad))
}
