//! A small fully-convolutional network with a shared encoder and one or two
//! structurally identical decoder heads, with a hand-written backward pass.
//!
//! Feature maps are channel-last row-major `H x W x channels` buffers.
//! Every hidden layer uses `tanh`; the last layer of each head is linear and
//! emits one score per depth bin.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::depth::LogitVolume;
use crate::error::{Error, Result};

/// Zero-padded `k x k` convolution, `k` odd. Weights are laid out
/// `[ky][kx][in][out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv {
    pub kernel: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv {
    fn zeros(kernel: usize, inputs: usize, outputs: usize) -> Self {
        Conv {
            kernel,
            inputs,
            outputs,
            weights: vec![0.0; kernel * kernel * inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn random(kernel: usize, inputs: usize, outputs: usize, gain: f64, rng: &mut Xoshiro256PlusPlus) -> Self {
        let mut conv = Conv::zeros(kernel, inputs, outputs);
        let fan_in = (kernel * kernel * inputs) as f64;
        let normal = Normal::new(0.0, gain / fan_in.sqrt()).expect("positive std");
        for w in &mut conv.weights {
            *w = normal.sample(rng);
        }
        conv
    }

    /// Patch matrix `(h*w) x (k*k*inputs)`, zero outside the image. `None`
    /// for a 1x1 kernel, whose patch matrix is the input itself.
    fn patches(&self, input: &[f64], h: usize, w: usize) -> Option<Vec<f64>> {
        let (ci, k) = (self.inputs, self.kernel);
        if k == 1 {
            return None;
        }
        let r = k / 2;
        let mut cols = Vec::with_capacity(h * w * k * k * ci);
        for y in 0..h {
            for x in 0..w {
                for ky in 0..k {
                    let yy = (y + ky).checked_sub(r).filter(|&v| v < h);
                    for kx in 0..k {
                        match (yy, (x + kx).checked_sub(r).filter(|&v| v < w)) {
                            (Some(yy), Some(xx)) => {
                                cols.extend_from_slice(&input[(yy * w + xx) * ci..(yy * w + xx + 1) * ci])
                            }
                            _ => cols.resize(cols.len() + ci, 0.0),
                        }
                    }
                }
            }
        }
        Some(cols)
    }

    /// Output and patch matrix (see [`Conv::patches`]) of one layer.
    fn forward(&self, input: &[f64], h: usize, w: usize) -> (Vec<f64>, Option<Vec<f64>>) {
        let co = self.outputs;
        let depth = self.kernel * self.kernel * self.inputs;
        let patches = self.patches(input, h, w);
        let cols = patches.as_deref().unwrap_or(input);
        let mut out = Vec::with_capacity(h * w * co);
        for _ in 0..h * w {
            out.extend_from_slice(&self.bias);
        }
        // out (P x co) += cols (P x depth) * weights (depth x co)
        gemm(h * w, depth, co, 1.0, cols, Layout::Rows(depth), &self.weights, Layout::Rows(co), &mut out);
        (out, patches)
    }

    /// Accumulates parameter gradients into `grad`; returns the gradient
    /// with respect to the input when `want_input` is set. `cols` is the
    /// patch matrix of the forward pass.
    fn backward(
        &self,
        cols: &[f64],
        h: usize,
        w: usize,
        grad_out: &[f64],
        grad: &mut Conv,
        want_input: bool,
    ) -> Option<Vec<f64>> {
        let (ci, co, k) = (self.inputs, self.outputs, self.kernel);
        let depth = k * k * ci;
        let p = h * w;
        for g in grad_out.chunks_exact(co) {
            for (b, gv) in grad.bias.iter_mut().zip(g) {
                *b += gv;
            }
        }
        // dW (depth x co) += cols^T * grad_out
        gemm(depth, p, co, 1.0, cols, Layout::Cols(depth), grad_out, Layout::Rows(co), &mut grad.weights);
        if !want_input {
            return None;
        }
        // d cols (P x depth) = grad_out * W^T
        let mut dcols = vec![0.0; p * depth];
        gemm(p, co, depth, 1.0, grad_out, Layout::Rows(co), &self.weights, Layout::Cols(co), &mut dcols);
        if k == 1 {
            return Some(dcols);
        }
        let r = k / 2;
        let mut grad_in = vec![0.0; p * ci];
        for y in 0..h {
            for x in 0..w {
                let src = &dcols[(y * w + x) * depth..(y * w + x + 1) * depth];
                for ky in 0..k {
                    let Some(yy) = (y + ky).checked_sub(r).filter(|&v| v < h) else { continue };
                    for kx in 0..k {
                        let Some(xx) = (x + kx).checked_sub(r).filter(|&v| v < w) else { continue };
                        let t = (ky * k + kx) * ci;
                        for (gi, v) in grad_in[(yy * w + xx) * ci..(yy * w + xx + 1) * ci].iter_mut().zip(&src[t..t + ci]) {
                            *gi += v;
                        }
                    }
                }
            }
        }
        Some(grad_in)
    }

    fn params(&self) -> [&[f64]; 2] {
        [&self.weights, &self.bias]
    }

    fn params_mut(&mut self) -> [&mut [f64]; 2] {
        [&mut self.weights, &mut self.bias]
    }
}

/// Storage of a dense matrix with `n` values per row (`Rows(n)`), or the
/// transpose of such a matrix (`Cols(n)`).
#[derive(Clone, Copy)]
enum Layout {
    Rows(usize),
    Cols(usize),
}

impl Layout {
    fn strides(self) -> (isize, isize) {
        match self {
            Layout::Rows(n) => (n as isize, 1),
            Layout::Cols(n) => (1, n as isize),
        }
    }
}

/// `c (m x n, row-major) += alpha * a (m x k) * b (k x n)`.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], la: Layout, b: &[f64], lb: Layout, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = la.strides();
    let (rsb, csb) = lb.strides();
    // SAFETY: the slices hold m*k, k*n and m*n values laid out as described
    // by the strides, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, alpha, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, 1.0, c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// Network shape. Both heads share it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Input channels of the image.
    pub input_channels: usize,
    /// Width of every encoder layer.
    pub features: usize,
    /// Number of 3x3 encoder layers.
    pub encoder_layers: usize,
    /// Width of the hidden layer in each head (0 = linear head).
    pub head_hidden: usize,
    /// Kernel size of the hidden head layer (odd).
    pub head_kernel: usize,
    /// Output channels, one per depth bin.
    pub num_bins: usize,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_channels: 1,
            features: 12,
            encoder_layers: 2,
            head_hidden: 16,
            head_kernel: 1,
            num_bins: 16,
            init_seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.features == 0 || self.encoder_layers == 0 || self.num_bins < 2 {
            return Err(Error::InvalidParameter(
                "model: input_channels, features and encoder_layers must be > 0 and num_bins >= 2".into(),
            ));
        }
        if self.head_kernel.is_multiple_of(2) {
            return Err(Error::InvalidParameter("model: head_kernel must be odd".into()));
        }
        Ok(())
    }
}

/// Shared encoder plus `heads.len()` decoder heads.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyModel {
    pub encoder: Vec<Conv>,
    pub heads: Vec<Vec<Conv>>,
}

/// Intermediate activations of one forward pass.
#[derive(Clone, Debug)]
pub struct Activations {
    height: usize,
    width: usize,
    /// Encoder layer inputs, then the encoder output.
    encoder: Vec<Vec<f64>>,
    encoder_patches: Vec<Option<Vec<f64>>>,
    /// Per head: layer inputs (first is the encoder output, shared).
    heads: Vec<Vec<Vec<f64>>>,
    head_patches: Vec<Vec<Option<Vec<f64>>>>,
    /// Per head scores.
    pub logits: Vec<LogitVolume>,
}

fn tanh_in_place(v: &mut [f64]) {
    for x in v {
        *x = x.tanh();
    }
}

/// `grad *= 1 - act^2` where `act = tanh(pre)`.
fn tanh_backward(grad: &mut [f64], act: &[f64]) {
    for (g, a) in grad.iter_mut().zip(act) {
        *g *= 1.0 - a * a;
    }
}

impl ToyModel {
    /// Randomly initialized model with `num_heads` heads. Head `i` draws
    /// from its own stream so the heads start independent.
    pub fn new(config: &ModelConfig, num_heads: usize) -> Result<Self> {
        config.validate()?;
        if num_heads == 0 {
            return Err(Error::InvalidParameter("model needs at least one head".into()));
        }
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.init_seed);
        let mut encoder = Vec::with_capacity(config.encoder_layers);
        let mut inputs = config.input_channels;
        for _ in 0..config.encoder_layers {
            encoder.push(Conv::random(3, inputs, config.features, 1.0, &mut rng));
            inputs = config.features;
        }
        let heads = (0..num_heads)
            .map(|_| {
                let mut layers = Vec::new();
                let mut inputs = config.features;
                if config.head_hidden > 0 {
                    layers.push(Conv::random(config.head_kernel, inputs, config.head_hidden, 1.0, &mut rng));
                    inputs = config.head_hidden;
                }
                layers.push(Conv::random(1, inputs, config.num_bins, 0.5, &mut rng));
                layers
            })
            .collect();
        Ok(ToyModel { encoder, heads })
    }

    /// Same shape with every parameter zero.
    pub fn zeros_like(&self) -> Self {
        let z = |c: &Conv| Conv::zeros(c.kernel, c.inputs, c.outputs);
        ToyModel {
            encoder: self.encoder.iter().map(z).collect(),
            heads: self.heads.iter().map(|h| h.iter().map(z).collect()).collect(),
        }
    }

    /// Zeroes the last layer of every head, making all scores uniform.
    pub fn zero_head_outputs(&mut self) {
        for head in &mut self.heads {
            let last = head.last_mut().expect("heads are non-empty");
            last.weights.fill(0.0);
            last.bias.fill(0.0);
        }
    }

    pub fn num_heads(&self) -> usize {
        self.heads.len()
    }

    pub fn input_channels(&self) -> usize {
        self.encoder[0].inputs
    }

    pub fn num_bins(&self) -> usize {
        self.heads[0].last().expect("heads are non-empty").outputs
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn layers(&self) -> impl Iterator<Item = &Conv> {
        self.encoder.iter().chain(self.heads.iter().flatten())
    }

    /// Parameter slices in a fixed order (encoder, then heads).
    pub fn params(&self) -> Vec<&[f64]> {
        self.layers().flat_map(|c| c.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.encoder
            .iter_mut()
            .chain(self.heads.iter_mut().flatten())
            .flat_map(|c| c.params_mut())
            .collect()
    }

    /// `self += scale * other`, parameter by parameter.
    pub fn add_scaled(&mut self, other: &ToyModel, scale: f64) {
        for (dst, src) in self.params_mut().into_iter().zip(other.params()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// Scores of every head for an `h x w x input_channels` image.
    pub fn forward(&self, image: &[f64], h: usize, w: usize) -> Result<Activations> {
        let expected = h * w * self.input_channels();
        if image.len() != expected || h == 0 || w == 0 {
            return Err(Error::ShapeMismatch(format!(
                "image has {} values, model expects {h}x{w}x{} = {expected}",
                image.len(),
                self.input_channels()
            )));
        }
        let mut encoder = vec![image.to_vec()];
        let mut encoder_patches = Vec::with_capacity(self.encoder.len());
        for conv in &self.encoder {
            let (mut next, patches) = conv.forward(encoder.last().unwrap(), h, w);
            tanh_in_place(&mut next);
            encoder.push(next);
            encoder_patches.push(patches);
        }
        let features = encoder.last().unwrap();
        let mut heads = Vec::with_capacity(self.heads.len());
        let mut head_patches = Vec::with_capacity(self.heads.len());
        let mut logits = Vec::with_capacity(self.heads.len());
        for head in &self.heads {
            let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(head.len());
            let mut patches = Vec::with_capacity(head.len());
            let mut current = features.clone();
            for (i, conv) in head.iter().enumerate() {
                let (mut next, p) = conv.forward(&current, h, w);
                if i + 1 < head.len() {
                    tanh_in_place(&mut next);
                }
                inputs.push(std::mem::replace(&mut current, next));
                patches.push(p);
            }
            logits.push(LogitVolume::new(h, w, self.num_bins(), current)?);
            heads.push(inputs);
            head_patches.push(patches);
        }
        Ok(Activations {
            height: h,
            width: w,
            encoder,
            encoder_patches,
            heads,
            head_patches,
            logits,
        })
    }

    /// Backpropagates per-head score gradients through the network and adds
    /// the parameter gradients into `grad`. The encoder receives the sum
    /// over heads.
    pub fn backward(&self, acts: &Activations, score_grads: &[LogitVolume], grad: &mut ToyModel) -> Result<()> {
        if score_grads.len() != self.heads.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} score gradients for {} heads",
                score_grads.len(),
                self.heads.len()
            )));
        }
        let (h, w) = (acts.height, acts.width);
        let mut feature_grad = vec![0.0; h * w * self.encoder.last().unwrap().outputs];
        for (k, head) in self.heads.iter().enumerate() {
            if !score_grads[k].same_shape(&acts.logits[k]) {
                return Err(Error::ShapeMismatch("score gradient does not match the head output".into()));
            }
            let mut g = score_grads[k].scores().to_vec();
            for i in (0..head.len()).rev() {
                let input = &acts.heads[k][i];
                let cols = acts.head_patches[k][i].as_deref().unwrap_or(input);
                let gi = head[i]
                    .backward(cols, h, w, &g, &mut grad.heads[k][i], true)
                    .expect("input gradient requested");
                g = gi;
                if i > 0 {
                    tanh_backward(&mut g, input);
                }
            }
            for (f, v) in feature_grad.iter_mut().zip(&g) {
                *f += v;
            }
        }
        let mut g = feature_grad;
        for i in (0..self.encoder.len()).rev() {
            tanh_backward(&mut g, &acts.encoder[i + 1]);
            let want = i > 0;
            let cols = acts.encoder_patches[i].as_deref().unwrap_or(&acts.encoder[i]);
            match self.encoder[i].backward(cols, h, w, &g, &mut grad.encoder[i], want) {
                Some(next) => g = next,
                None => break,
            }
        }
        Ok(())
    }
}
