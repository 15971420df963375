//! One LSTM layer: cell step, per-sequence forward with caching, and the
//! matching backward pass.
//!
//! Gate rows are stacked in the order input, forget, candidate, output, so
//! every kernel has `4 * hidden` rows. All math is f64.

use crate::error::{Error, Result};
use crate::neural::tensor::Tensor;

/// Weights of one layer. `w_x` is `[4*hidden, input]`, `w_h` is
/// `[4*hidden, hidden]`, `bias` is `[4*hidden]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights {
    pub input: usize,
    pub hidden: usize,
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub bias: Tensor,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmWeights {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input,
            hidden,
            w_x: Tensor::zeros(&[4 * hidden, input]),
            w_h: Tensor::zeros(&[4 * hidden, hidden]),
            bias: Tensor::zeros(&[4 * hidden]),
        }
    }

    fn check_shapes(&self) -> Result<()> {
        let h4 = 4 * self.hidden;
        if self.w_x.shape() != [h4, self.input]
            || self.w_h.shape() != [h4, self.hidden]
            || self.bias.shape() != [h4]
        {
            return Err(Error::ShapeMismatch(format!(
                "lstm weights inconsistent with input {} hidden {}",
                self.input, self.hidden
            )));
        }
        Ok(())
    }
}

/// Post-activation gate values and cell state for one step; kept so the
/// backward pass can be exact without recomputation.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// One cell update. Writes the new hidden and cell state into `h`/`c` and
/// returns the gate cache.
pub fn lstm_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    w: &LstmWeights,
    h: &mut [f64],
    c: &mut [f64],
) -> Result<StepCache> {
    w.check_shapes()?;
    if x.len() != w.input || h_prev.len() != w.hidden || c_prev.len() != w.hidden {
        return Err(Error::ShapeMismatch(format!(
            "lstm_step got x {} h {} c {} for input {} hidden {}",
            x.len(),
            h_prev.len(),
            c_prev.len(),
            w.input,
            w.hidden
        )));
    }
    let hid = w.hidden;
    let wx = w.w_x.data();
    let wh = w.w_h.data();
    let b = w.bias.data();

    let mut pre = vec![0.0f64; 4 * hid];
    for (r, p) in pre.iter_mut().enumerate() {
        let mut acc = b[r];
        let xrow = &wx[r * w.input..(r + 1) * w.input];
        for (j, &xj) in x.iter().enumerate() {
            acc += xrow[j] * xj;
        }
        let hrow = &wh[r * hid..(r + 1) * hid];
        for (j, &hj) in h_prev.iter().enumerate() {
            acc += hrow[j] * hj;
        }
        *p = acc;
    }

    let mut cache = StepCache {
        i: vec![0.0; hid],
        f: vec![0.0; hid],
        g: vec![0.0; hid],
        o: vec![0.0; hid],
        tanh_c: vec![0.0; hid],
    };
    for u in 0..hid {
        let i = sigmoid(pre[u]);
        let f = sigmoid(pre[hid + u]);
        let g = pre[2 * hid + u].tanh();
        let o = sigmoid(pre[3 * hid + u]);
        let cu = f * c_prev[u] + i * g;
        let tc = cu.tanh();
        c[u] = cu;
        h[u] = o * tc;
        cache.i[u] = i;
        cache.f[u] = f;
        cache.g[u] = g;
        cache.o[u] = o;
        cache.tanh_c[u] = tc;
    }
    Ok(cache)
}

/// Everything the backward pass needs about one layer's forward run over a
/// sequence: inputs, gate caches, and the state trajectories (index 0 holds
/// the zero initial state).
pub struct LayerCache {
    pub steps: Vec<StepCache>,
    /// `hs[t]` is the hidden state entering step `t`; `hs[steps]` the final.
    pub hs: Vec<Vec<f64>>,
    pub cs: Vec<Vec<f64>>,
}

/// Runs the layer over a whole sequence from zero initial state. `xs` is
/// row-major `[steps, input]`. Returns the cache; the output sequence is
/// `cache.hs[1..]`.
pub fn forward_layer(xs: &[f64], steps: usize, w: &LstmWeights) -> Result<LayerCache> {
    if xs.len() != steps * w.input {
        return Err(Error::ShapeMismatch(format!(
            "layer input has {} values, expected {} x {}",
            xs.len(),
            steps,
            w.input
        )));
    }
    let hid = w.hidden;
    let mut cache = LayerCache {
        steps: Vec::with_capacity(steps),
        hs: Vec::with_capacity(steps + 1),
        cs: Vec::with_capacity(steps + 1),
    };
    cache.hs.push(vec![0.0; hid]);
    cache.cs.push(vec![0.0; hid]);
    let mut h = vec![0.0; hid];
    let mut c = vec![0.0; hid];
    for t in 0..steps {
        let x = &xs[t * w.input..(t + 1) * w.input];
        let sc = lstm_step(x, &cache.hs[t], &cache.cs[t], w, &mut h, &mut c)?;
        cache.steps.push(sc);
        cache.hs.push(h.clone());
        cache.cs.push(c.clone());
    }
    Ok(cache)
}

/// Gradients of one layer's weights, same shapes as [`LstmWeights`].
pub struct LayerGrads {
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub bias: Tensor,
}

/// Backpropagates through the layer. `xs` is the forward input,
/// `d_hs[t * hidden ..]` the loss gradient w.r.t. the step-`t` output.
/// Accumulates weight gradients into `grads` and returns the gradient
/// w.r.t. `xs` (needed to reach the layer below).
pub fn backward_layer(
    xs: &[f64],
    steps: usize,
    w: &LstmWeights,
    cache: &LayerCache,
    d_hs: &[f64],
    grads: &mut LayerGrads,
) -> Result<Vec<f64>> {
    if d_hs.len() != steps * w.hidden {
        return Err(Error::ShapeMismatch(format!(
            "output gradient has {} values, expected {} x {}",
            d_hs.len(),
            steps,
            w.hidden
        )));
    }
    let hid = w.hidden;
    let inp = w.input;
    let wx = w.w_x.data();
    let wh = w.w_h.data();
    let gwx = grads.w_x.data_mut();
    let gwh = grads.w_h.data_mut();
    let gb = grads.bias.data_mut();

    let mut d_xs = vec![0.0f64; steps * inp];
    let mut dh_next = vec![0.0f64; hid];
    let mut dc_next = vec![0.0f64; hid];
    let mut dpre = vec![0.0f64; 4 * hid];

    for t in (0..steps).rev() {
        let sc = &cache.steps[t];
        let c_prev = &cache.cs[t];
        let h_prev = &cache.hs[t];
        let x = &xs[t * inp..(t + 1) * inp];

        for u in 0..hid {
            let dh = d_hs[t * hid + u] + dh_next[u];
            let (i, f, g, o, tc) = (sc.i[u], sc.f[u], sc.g[u], sc.o[u], sc.tanh_c[u]);
            let dc = dh * o * (1.0 - tc * tc) + dc_next[u];
            dpre[u] = dc * g * i * (1.0 - i);
            dpre[hid + u] = dc * c_prev[u] * f * (1.0 - f);
            dpre[2 * hid + u] = dc * i * (1.0 - g * g);
            dpre[3 * hid + u] = dh * tc * o * (1.0 - o);
            dc_next[u] = dc * f;
        }

        dh_next.fill(0.0);
        let dx = &mut d_xs[t * inp..(t + 1) * inp];
        for (r, &dp) in dpre.iter().enumerate() {
            gb[r] += dp;
            let xrow = r * inp;
            for j in 0..inp {
                gwx[xrow + j] += dp * x[j];
                dx[j] += wx[xrow + j] * dp;
            }
            let hrow = r * hid;
            for j in 0..hid {
                gwh[hrow + j] += dp * h_prev[j];
                dh_next[j] += wh[hrow + j] * dp;
            }
        }
    }
    Ok(d_xs)
}
