//! The full network: two stacked LSTM layers and a linear output head,
//! with exact backpropagation through time over whole sequences.

use rand::Rng;

use crate::error::{Error, Result};
use crate::neural::lstm::{backward_layer, forward_layer, LayerCache, LayerGrads, LstmWeights};
use crate::neural::tensor::Tensor;

pub const LSTM_LAYERS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub features: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub layers: Vec<LstmWeights>,
    /// `[outputs, hidden]`
    pub dense_w: Tensor,
    /// `[outputs]`
    pub dense_b: Tensor,
}

fn init_uniform<R: Rng>(t: &mut Tensor, fan_in: usize, rng: &mut R) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for v in t.data_mut() {
        *v = rng.gen_range(-bound..bound);
    }
}

impl Network {
    /// Random initialization: kernels uniform in +-1/sqrt(fan_in), biases
    /// zero except the forget gate at 1.0 so early cells remember.
    pub fn init<R: Rng>(features: usize, hidden: usize, outputs: usize, rng: &mut R) -> Result<Self> {
        if features == 0 || hidden == 0 || outputs == 0 {
            return Err(Error::InvalidParameter(
                "features, hidden, and outputs must be positive".into(),
            ));
        }
        let mut layers = Vec::with_capacity(LSTM_LAYERS);
        for l in 0..LSTM_LAYERS {
            let input = if l == 0 { features } else { hidden };
            let mut w = LstmWeights::zeros(input, hidden);
            init_uniform(&mut w.w_x, input, rng);
            init_uniform(&mut w.w_h, hidden, rng);
            w.bias.data_mut()[hidden..2 * hidden].fill(1.0);
            layers.push(w);
        }
        let mut dense_w = Tensor::zeros(&[outputs, hidden]);
        init_uniform(&mut dense_w, hidden, rng);
        let dense_b = Tensor::zeros(&[outputs]);
        Ok(Self { features, hidden, outputs, layers, dense_w, dense_b })
    }

    /// Trainable tensors in the fixed order used by gradients, the
    /// optimizer, and checkpoints.
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for l in 0..self.layers.len() {
            names.push(format!("lstm{l}.w_x"));
            names.push(format!("lstm{l}.w_h"));
            names.push(format!("lstm{l}.bias"));
        }
        names.push("dense.w".into());
        names.push("dense.b".into());
        names
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut ts = Vec::new();
        for l in &self.layers {
            ts.push(&l.w_x);
            ts.push(&l.w_h);
            ts.push(&l.bias);
        }
        ts.push(&self.dense_w);
        ts.push(&self.dense_b);
        ts
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut ts = Vec::new();
        for l in &mut self.layers {
            ts.push(&mut l.w_x);
            ts.push(&mut l.w_h);
            ts.push(&mut l.bias);
        }
        ts.push(&mut self.dense_w);
        ts.push(&mut self.dense_b);
        ts
    }

    /// Zero gradient tensors matching [`Self::tensors`].
    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect()
    }

    /// Forward over one subject's sequence. `xs` is `[steps, features]`
    /// row-major. Returns raw per-step outputs `[steps, outputs]` plus the
    /// caches the backward pass needs. Output at step t depends only on
    /// inputs at steps <= t.
    pub fn forward_sequence(&self, xs: &[f64], steps: usize) -> Result<(Vec<f64>, Vec<LayerCache>)> {
        if xs.len() != steps * self.features {
            return Err(Error::ShapeMismatch(format!(
                "input has {} values, expected {} x {}",
                xs.len(),
                steps,
                self.features
            )));
        }
        if xs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite network input".into()));
        }

        let mut caches = Vec::with_capacity(self.layers.len());
        let mut layer_in: Vec<f64> = Vec::new();
        for (l, w) in self.layers.iter().enumerate() {
            let input: &[f64] = if l == 0 { xs } else { &layer_in };
            let cache = forward_layer(input, steps, w)?;
            let mut out = Vec::with_capacity(steps * self.hidden);
            for h in &cache.hs[1..] {
                out.extend_from_slice(h);
            }
            caches.push(cache);
            layer_in = out;
        }

        let dw = self.dense_w.data();
        let db = self.dense_b.data();
        let mut outputs = vec![0.0f64; steps * self.outputs];
        for t in 0..steps {
            let h = &layer_in[t * self.hidden..(t + 1) * self.hidden];
            for r in 0..self.outputs {
                let row = &dw[r * self.hidden..(r + 1) * self.hidden];
                let mut acc = db[r];
                for (j, &hj) in h.iter().enumerate() {
                    acc += row[j] * hj;
                }
                outputs[t * self.outputs + r] = acc;
            }
        }
        Ok((outputs, caches))
    }

    /// Forward without caches; raw outputs only.
    pub fn forward(&self, xs: &[f64], steps: usize) -> Result<Vec<f64>> {
        Ok(self.forward_sequence(xs, steps)?.0)
    }

    /// Accumulates exact loss gradients for one subject into `grads`
    /// (ordered as [`Self::tensors`]). `d_out` is the loss gradient w.r.t.
    /// every raw output, `[steps, outputs]` row-major; `xs` and `caches`
    /// must come from the matching [`Self::forward_sequence`] call.
    pub fn backward_sequence(
        &self,
        xs: &[f64],
        steps: usize,
        caches: &[LayerCache],
        d_out: &[f64],
        grads: &mut [Tensor],
    ) -> Result<()> {
        if d_out.len() != steps * self.outputs {
            return Err(Error::ShapeMismatch(format!(
                "output gradient has {} values, expected {} x {}",
                d_out.len(),
                steps,
                self.outputs
            )));
        }
        if caches.len() != self.layers.len() {
            return Err(Error::InvalidData("forward cache missing".into()));
        }
        let expected = 3 * self.layers.len() + 2;
        if grads.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "gradient slot count {} != {expected}",
                grads.len()
            )));
        }

        let hid = self.hidden;
        let top = self.layers.len() - 1;
        let dw = self.dense_w.data();

        // Dense head: accumulate its gradients and seed the top layer's
        // output gradient.
        let mut d_h_top = vec![0.0f64; steps * hid];
        {
            let (gdw, gdb) = {
                let (a, b) = grads.split_at_mut(grads.len() - 1);
                (a.last_mut().unwrap(), &mut b[0])
            };
            let gdw = gdw.data_mut();
            let gdb = gdb.data_mut();
            let top_hs = &caches[top].hs;
            for t in 0..steps {
                let h = &top_hs[t + 1];
                for r in 0..self.outputs {
                    let d = d_out[t * self.outputs + r];
                    if d == 0.0 {
                        continue;
                    }
                    gdb[r] += d;
                    let row = r * hid;
                    let dh = &mut d_h_top[t * hid..(t + 1) * hid];
                    for j in 0..hid {
                        gdw[row + j] += d * h[j];
                        dh[j] += dw[row + j] * d;
                    }
                }
            }
        }

        // LSTM layers, top down. Layer l's input gradient becomes layer
        // l-1's output gradient.
        let mut d_hs = d_h_top;
        for l in (0..self.layers.len()).rev() {
            let w = &self.layers[l];
            let owned_input;
            let input: &[f64] = if l == 0 {
                xs
            } else {
                let hs = &caches[l - 1].hs;
                let mut flat = Vec::with_capacity(steps * hid);
                for h in &hs[1..] {
                    flat.extend_from_slice(h);
                }
                owned_input = flat;
                &owned_input
            };
            let mut lg = LayerGrads {
                w_x: std::mem::replace(&mut grads[3 * l], Tensor::zeros(&[0])),
                w_h: std::mem::replace(&mut grads[3 * l + 1], Tensor::zeros(&[0])),
                bias: std::mem::replace(&mut grads[3 * l + 2], Tensor::zeros(&[0])),
            };
            let d_input = backward_layer(input, steps, w, &caches[l], &d_hs, &mut lg)?;
            grads[3 * l] = lg.w_x;
            grads[3 * l + 1] = lg.w_h;
            grads[3 * l + 2] = lg.bias;
            d_hs = d_input;
        }
        Ok(())
    }
}
