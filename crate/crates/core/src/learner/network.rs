//! The convolutional Q-network and its optimizer.
//!
//! Layout: one valid-padded strided convolution with ReLU, two ReLU dense
//! layers and a linear 12-way output head. Two forward paths exist with
//! different jobs:
//!
//! * [`Network::forward_raw`] / [`Network::forward_many`] — the canonical
//!   per-output dot-product kernel. Every output accumulates in a fixed
//!   order that does not depend on how many inputs are evaluated together,
//!   so action selection is bit-identical whether drones are scored one at
//!   a time or in a batch.
//! * [`Network::forward_batch`] — the training path, expressed as matrix
//!   products (im2col for the convolution) so a 64-sample batch runs at
//!   GEMM speed. Gradients flow through [`Network::backward_batch`].
//!
//! Everything is generic over `f32`/`f64`; training uses `f32`, while
//! gradient checks instantiate `f64`.

use ndarray::{Array1, Array2, LinalgScalar};
use num_traits::{Float, FromPrimitive};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::Observation;
use crate::{Error, Result};

/// Scalar type of network parameters.
pub trait Real:
    LinalgScalar + Float + FromPrimitive + Send + Sync + std::fmt::Debug + 'static
{
    fn scalar(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Layer shapes of the Q-network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkConfig {
    /// Input side length (square), pixels.
    pub input_size: usize,
    /// Input channels (2 greedy, 3 cooperative).
    pub channels: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub conv_stride: usize,
    pub fc1: usize,
    pub fc2: usize,
    pub outputs: usize,
}

impl NetworkConfig {
    /// The standard architecture for a given observation channel count:
    /// 64x64 input, 16 8x8 stride-2 filters, two 1024 dense layers, 12 outputs.
    pub fn standard(channels: usize) -> Self {
        Self {
            input_size: 64,
            channels,
            conv_filters: 16,
            conv_kernel: 8,
            conv_stride: 2,
            fc1: 1024,
            fc2: 1024,
            outputs: 12,
        }
    }

    /// Convolution output side: `(input - kernel) / stride + 1`.
    pub fn conv_out(&self) -> usize {
        (self.input_size - self.conv_kernel) / self.conv_stride + 1
    }

    /// Flattened convolution feature count.
    pub fn flat(&self) -> usize {
        self.conv_out() * self.conv_out() * self.conv_filters
    }

    pub fn input_len(&self) -> usize {
        self.channels * self.input_size * self.input_size
    }

    fn patch(&self) -> usize {
        self.channels * self.conv_kernel * self.conv_kernel
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size < self.conv_kernel || self.conv_stride == 0 {
            return Err(Error::Config("convolution does not fit the input".into()));
        }
        if self.channels == 0 || self.conv_filters == 0 || self.fc1 == 0 || self.fc2 == 0
            || self.outputs == 0
        {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Q-network parameters. Weight matrices are stored row-major with one row
/// per output unit; the convolution kernel is `(filters, channels*k*k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T: Real> {
    pub config: NetworkConfig,
    pub conv_w: Array2<T>,
    pub conv_b: Array1<T>,
    pub fc1_w: Array2<T>,
    pub fc1_b: Array1<T>,
    pub fc2_w: Array2<T>,
    pub fc2_b: Array1<T>,
    pub out_w: Array2<T>,
    pub out_b: Array1<T>,
}

/// Per-parameter gradients, same shapes as [`Network`].
#[derive(Debug, Clone)]
pub struct Gradients<T: Real> {
    pub conv_w: Array2<T>,
    pub conv_b: Array1<T>,
    pub fc1_w: Array2<T>,
    pub fc1_b: Array1<T>,
    pub fc2_w: Array2<T>,
    pub fc2_b: Array1<T>,
    pub out_w: Array2<T>,
    pub out_b: Array1<T>,
}

/// Activations retained by the batched forward pass for backpropagation.
pub struct BatchForward<T: Real> {
    batch: usize,
    cols: Array2<T>,
    conv_pre: Array2<T>,
    conv_act: Array2<T>,
    fc1_pre: Array2<T>,
    fc1_act: Array2<T>,
    fc2_pre: Array2<T>,
    fc2_act: Array2<T>,
    /// Output Q-values, one row per batch item.
    pub q: Array2<T>,
}

impl<T: Real> Network<T> {
    /// Zero-initialized network (useful as an accumulator shape).
    pub fn zeros(config: NetworkConfig) -> Self {
        let f = config.conv_filters;
        Self {
            config,
            conv_w: Array2::zeros((f, config.patch())),
            conv_b: Array1::zeros(f),
            fc1_w: Array2::zeros((config.fc1, config.flat())),
            fc1_b: Array1::zeros(config.fc1),
            fc2_w: Array2::zeros((config.fc2, config.fc1)),
            fc2_b: Array1::zeros(config.fc2),
            out_w: Array2::zeros((config.outputs, config.fc2)),
            out_b: Array1::zeros(config.outputs),
        }
    }

    /// He-uniform initialization for the ReLU stack, `±1/sqrt(fan_in)` for the
    /// linear head, zero biases; deterministic in the seed.
    pub fn init(config: NetworkConfig, seed: u64) -> Self {
        use rand_chacha::rand_core::SeedableRng;
        let mut net = Self::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        fill_uniform(&mut net.conv_w, he_limit(config.patch()), &mut rng);
        fill_uniform(&mut net.fc1_w, he_limit(config.flat()), &mut rng);
        fill_uniform(&mut net.fc2_w, he_limit(config.fc1), &mut rng);
        fill_uniform(&mut net.out_w, 1.0 / (config.fc2 as f64).sqrt(), &mut rng);
        net
    }

    /// All parameter tensors in serialization order.
    pub fn param_slices(&self) -> [&[T]; 8] {
        [
            self.conv_w.as_slice().unwrap(),
            self.conv_b.as_slice().unwrap(),
            self.fc1_w.as_slice().unwrap(),
            self.fc1_b.as_slice().unwrap(),
            self.fc2_w.as_slice().unwrap(),
            self.fc2_b.as_slice().unwrap(),
            self.out_w.as_slice().unwrap(),
            self.out_b.as_slice().unwrap(),
        ]
    }

    pub fn param_slices_mut(&mut self) -> [&mut [T]; 8] {
        [
            self.conv_w.as_slice_mut().unwrap(),
            self.conv_b.as_slice_mut().unwrap(),
            self.fc1_w.as_slice_mut().unwrap(),
            self.fc1_b.as_slice_mut().unwrap(),
            self.fc2_w.as_slice_mut().unwrap(),
            self.fc2_b.as_slice_mut().unwrap(),
            self.out_w.as_slice_mut().unwrap(),
            self.out_b.as_slice_mut().unwrap(),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.config.input_len() {
            return Err(Error::ShapeMismatch {
                expected_w: self.config.input_len(),
                expected_h: 1,
                got_w: len,
                got_h: 1,
            });
        }
        Ok(())
    }

    /// Canonical single-input forward pass over a raw channel-major tensor.
    pub fn forward_raw(&self, input: &[T]) -> Result<Vec<T>> {
        self.check_input(input.len())?;
        Ok(self.forward_group(&[input]).pop().expect("one output per input"))
    }

    /// Canonical forward pass over several inputs. Each output is accumulated
    /// exactly as in [`Network::forward_raw`]; weight rows are swept once for
    /// the whole group.
    pub fn forward_many(&self, inputs: &[&[T]]) -> Result<Vec<Vec<T>>> {
        for input in inputs {
            self.check_input(input.len())?;
        }
        Ok(self.forward_group(inputs))
    }

    fn forward_group(&self, inputs: &[&[T]]) -> Vec<Vec<T>> {
        let cfg = &self.config;
        let mut conv_acts = vec![vec![T::zero(); cfg.flat()]; inputs.len()];
        for (input, act) in inputs.iter().zip(conv_acts.iter_mut()) {
            self.conv_single(input, act);
        }
        let mut fc1_acts = vec![vec![T::zero(); cfg.fc1]; inputs.len()];
        dense_rows(&self.fc1_w, &self.fc1_b, &conv_acts, &mut fc1_acts, true);
        let mut fc2_acts = vec![vec![T::zero(); cfg.fc2]; inputs.len()];
        dense_rows(&self.fc2_w, &self.fc2_b, &fc1_acts, &mut fc2_acts, true);
        let mut qs = vec![vec![T::zero(); cfg.outputs]; inputs.len()];
        dense_rows(&self.out_w, &self.out_b, &fc2_acts, &mut qs, false);
        qs
    }

    /// Direct convolution of one channel-major input, ReLU applied, output in
    /// `[filter][row][col]` order.
    fn conv_single(&self, input: &[T], out: &mut [T]) {
        let cfg = &self.config;
        let (n, k, stride) = (cfg.input_size, cfg.conv_kernel, cfg.conv_stride);
        let side = cfg.conv_out();
        let w = self.conv_w.as_slice().unwrap();
        let patch = cfg.patch();
        for f in 0..cfg.conv_filters {
            let wrow = &w[f * patch..(f + 1) * patch];
            let bias = self.conv_b[f];
            for oy in 0..side {
                for ox in 0..side {
                    let mut acc = bias;
                    for c in 0..cfg.channels {
                        for ky in 0..k {
                            let in_off = (c * n + oy * stride + ky) * n + ox * stride;
                            let w_off = (c * k + ky) * k;
                            acc = acc + dot(&input[in_off..in_off + k], &wrow[w_off..w_off + k]);
                        }
                    }
                    out[(f * side + oy) * side + ox] = acc.max(T::zero());
                }
            }
        }
    }

    /// Batched forward pass via im2col and matrix products, retaining the
    /// activations needed for backpropagation.
    pub fn forward_batch(&self, inputs: &[&[T]]) -> Result<BatchForward<T>> {
        for input in inputs {
            self.check_input(input.len())?;
        }
        let cfg = &self.config;
        let batch = inputs.len();
        let side = cfg.conv_out();
        let positions = side * side;
        let cols = self.im2col(inputs);

        // Convolution as ((batch*positions) x patch) * (patch x filters).
        let conv = par_dot(&cols, &self.conv_w.t().to_owned());
        // Re-order to (batch x [filter][row][col]) and apply bias + ReLU.
        let flat = cfg.flat();
        let mut conv_pre = Array2::zeros((batch, flat));
        {
            let pre = conv_pre.as_slice_mut().unwrap();
            let raw = conv.as_slice().unwrap();
            for b in 0..batch {
                for p in 0..positions {
                    let row = (b * positions + p) * cfg.conv_filters;
                    for f in 0..cfg.conv_filters {
                        pre[b * flat + f * positions + p] = raw[row + f] + self.conv_b[f];
                    }
                }
            }
        }
        let conv_act = relu(&conv_pre);

        let fc1_pre = affine(&conv_act, &self.fc1_w, &self.fc1_b);
        let fc1_act = relu(&fc1_pre);
        let fc2_pre = affine(&fc1_act, &self.fc2_w, &self.fc2_b);
        let fc2_act = relu(&fc2_pre);
        let q = affine(&fc2_act, &self.out_w, &self.out_b);

        Ok(BatchForward { batch, cols, conv_pre, conv_act, fc1_pre, fc1_act, fc2_pre, fc2_act, q })
    }

    /// Backpropagates `dq` (gradient of the loss in the output Q-values)
    /// through a retained forward pass, producing parameter gradients.
    pub fn backward_batch(&self, fwd: &BatchForward<T>, dq: &Array2<T>) -> Gradients<T> {
        let cfg = &self.config;
        let batch = fwd.batch;
        let side = cfg.conv_out();
        let positions = side * side;

        // Output head (linear).
        let out_w_grad = par_dot(&dq.t().to_owned(), &fwd.fc2_act);
        let out_b_grad = dq.sum_axis(ndarray::Axis(0));
        let dfc2_act = par_dot(dq, &self.out_w);
        let dfc2 = relu_backward(&dfc2_act, &fwd.fc2_pre);

        let fc2_w_grad = par_dot(&dfc2.t().to_owned(), &fwd.fc1_act);
        let fc2_b_grad = dfc2.sum_axis(ndarray::Axis(0));
        let dfc1_act = par_dot(&dfc2, &self.fc2_w);
        let dfc1 = relu_backward(&dfc1_act, &fwd.fc1_pre);

        let fc1_w_grad = par_dot(&dfc1.t().to_owned(), &fwd.conv_act);
        let fc1_b_grad = dfc1.sum_axis(ndarray::Axis(0));
        let dconv_act = par_dot(&dfc1, &self.fc1_w);
        let dconv = relu_backward(&dconv_act, &fwd.conv_pre);

        // Back to ((batch*positions) x filters) layout for the kernel grads.
        let mut dc = Array2::zeros((batch * positions, cfg.conv_filters));
        {
            let dst = dc.as_slice_mut().unwrap();
            let src = dconv.as_slice().unwrap();
            let flat = cfg.flat();
            for b in 0..batch {
                for p in 0..positions {
                    let row = (b * positions + p) * cfg.conv_filters;
                    for f in 0..cfg.conv_filters {
                        dst[row + f] = src[b * flat + f * positions + p];
                    }
                }
            }
        }
        let conv_w_grad = par_dot(&dc.t().to_owned(), &fwd.cols);
        let conv_b_grad = dc.sum_axis(ndarray::Axis(0));

        Gradients {
            conv_w: conv_w_grad,
            conv_b: conv_b_grad,
            fc1_w: fc1_w_grad,
            fc1_b: fc1_b_grad,
            fc2_w: fc2_w_grad,
            fc2_b: fc2_b_grad,
            out_w: out_w_grad,
            out_b: out_b_grad,
        }
    }

    fn im2col(&self, inputs: &[&[T]]) -> Array2<T> {
        let cfg = &self.config;
        let (n, k, stride) = (cfg.input_size, cfg.conv_kernel, cfg.conv_stride);
        let side = cfg.conv_out();
        let positions = side * side;
        let patch = cfg.patch();
        let mut cols = Array2::zeros((inputs.len() * positions, patch));
        let dst = cols.as_slice_mut().unwrap();
        for (b, input) in inputs.iter().enumerate() {
            for oy in 0..side {
                for ox in 0..side {
                    let row = (b * positions + oy * side + ox) * patch;
                    for c in 0..cfg.channels {
                        for ky in 0..k {
                            let src = (c * n + oy * stride + ky) * n + ox * stride;
                            let dst_off = row + (c * k + ky) * k;
                            dst[dst_off..dst_off + k].copy_from_slice(&input[src..src + k]);
                        }
                    }
                }
            }
        }
        cols
    }
}

impl Network<f32> {
    /// Q-values for an observation (canonical single-input path).
    pub fn forward_obs(&self, obs: &Observation) -> Result<Vec<f32>> {
        if obs.channels() != self.config.channels || obs.size() != self.config.input_size {
            return Err(Error::ShapeMismatch {
                expected_w: self.config.input_size,
                expected_h: self.config.channels,
                got_w: obs.size(),
                got_h: obs.channels(),
            });
        }
        self.forward_raw(obs.data())
    }
}

fn he_limit(fan_in: usize) -> f64 {
    (6.0 / fan_in as f64).sqrt()
}

fn fill_uniform<T: Real>(array: &mut Array2<T>, limit: f64, rng: &mut ChaCha8Rng) {
    for v in array.iter_mut() {
        *v = T::scalar((rng.gen::<f64>() * 2.0 - 1.0) * limit);
    }
}

/// Fixed-order eight-lane dot product; deterministic and autovectorizable.
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [T::zero(); 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let (ka, kb) = (&a[i * 8..i * 8 + 8], &b[i * 8..i * 8 + 8]);
        for l in 0..8 {
            lanes[l] = lanes[l] + ka[l] * kb[l];
        }
    }
    let mut tail = T::zero();
    for i in chunks * 8..a.len() {
        tail = tail + a[i] * b[i];
    }
    let head = ((lanes[0] + lanes[4]) + (lanes[2] + lanes[6]))
        + ((lanes[1] + lanes[5]) + (lanes[3] + lanes[7]));
    head + tail
}

/// Dense layer over row groups with the canonical kernel: weight rows are
/// swept in two fixed halves (parallel), every `(input, unit)` pair reduces
/// in the same order regardless of group size.
fn dense_rows<T: Real>(
    w: &Array2<T>,
    b: &Array1<T>,
    inputs: &[Vec<T>],
    outputs: &mut [Vec<T>],
    relu: bool,
) {
    let units = w.nrows();
    let in_len = w.ncols();
    let ws = w.as_slice().unwrap();
    let bs = b.as_slice().unwrap();
    // Two fixed halves of the unit range: deterministic for any thread pool.
    let mid = units / 2;
    let (mut left, mut right): (Vec<&mut [T]>, Vec<&mut [T]>) = outputs
        .iter_mut()
        .map(|o| o.as_mut_slice().split_at_mut(mid))
        .unzip();
    rayon::join(
        || dense_unit_range(ws, bs, inputs, &mut left, 0..mid, in_len, relu, 0),
        || dense_unit_range(ws, bs, inputs, &mut right, mid..units, in_len, relu, mid),
    );
}

fn dense_unit_range<T: Real>(
    ws: &[T],
    bs: &[T],
    inputs: &[Vec<T>],
    outs: &mut [&mut [T]],
    units: std::ops::Range<usize>,
    in_len: usize,
    relu: bool,
    offset: usize,
) {
    for j in units {
        let row = &ws[j * in_len..(j + 1) * in_len];
        for (input, out) in inputs.iter().zip(outs.iter_mut()) {
            let mut v = bs[j] + dot(row, input);
            if relu {
                v = v.max(T::zero());
            }
            out[j - offset] = v;
        }
    }
}

/// `x * w^T + b`, computed as two parallel half-matrices of a GEMM.
fn affine<T: Real>(x: &Array2<T>, w: &Array2<T>, b: &Array1<T>) -> Array2<T> {
    let mut y = par_dot(x, &w.t().to_owned());
    let bias = b.as_slice().unwrap();
    for mut row in y.rows_mut() {
        let row = row.as_slice_mut().unwrap();
        for (v, &add) in row.iter_mut().zip(bias) {
            *v = *v + add;
        }
    }
    y
}

/// Matrix product with a fixed two-way row split evaluated in parallel.
/// The split is constant, so results do not depend on the thread pool.
fn par_dot<T: Real>(a: &Array2<T>, b: &Array2<T>) -> Array2<T> {
    let (m, _) = a.dim();
    if m < 2 {
        return a.dot(b);
    }
    let mid = m / 2;
    let (top, bottom) = a.view().split_at(ndarray::Axis(0), mid);
    let (yt, yb) = rayon::join(|| top.dot(b), || bottom.dot(b));
    let mut y = Array2::zeros((m, b.ncols()));
    y.slice_mut(ndarray::s![..mid, ..]).assign(&yt);
    y.slice_mut(ndarray::s![mid.., ..]).assign(&yb);
    y
}

fn relu<T: Real>(x: &Array2<T>) -> Array2<T> {
    x.mapv(|v| v.max(T::zero()))
}

fn relu_backward<T: Real>(dact: &Array2<T>, pre: &Array2<T>) -> Array2<T> {
    let mut out = dact.clone();
    out.zip_mut_with(pre, |d, &p| {
        if p <= T::zero() {
            *d = T::zero();
        }
    });
    out
}

/// Adam optimizer state (first/second moments per parameter).
#[derive(Debug, Clone)]
pub struct AdamState<T: Real> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<T: Real> AdamState<T> {
    pub fn new(net: &Network<T>, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let m = net.param_slices().iter().map(|s| vec![T::zero(); s.len()]).collect();
        let v = net.param_slices().iter().map(|s| vec![T::zero(); s.len()]).collect();
        Self { m, v, step: 0, learning_rate, beta1, beta2, epsilon }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update with bias correction.
    pub fn apply(&mut self, net: &mut Network<T>, grads: &Gradients<T>) {
        self.step += 1;
        let b1 = T::scalar(self.beta1);
        let b2 = T::scalar(self.beta2);
        let one = T::one();
        let corr1 = T::scalar(1.0 - self.beta1.powi(self.step as i32));
        let corr2 = T::scalar(1.0 - self.beta2.powi(self.step as i32));
        let lr = T::scalar(self.learning_rate);
        let eps = T::scalar(self.epsilon);

        let grad_slices: [&[T]; 8] = [
            grads.conv_w.as_slice().unwrap(),
            grads.conv_b.as_slice().unwrap(),
            grads.fc1_w.as_slice().unwrap(),
            grads.fc1_b.as_slice().unwrap(),
            grads.fc2_w.as_slice().unwrap(),
            grads.fc2_b.as_slice().unwrap(),
            grads.out_w.as_slice().unwrap(),
            grads.out_b.as_slice().unwrap(),
        ];
        let params = net.param_slices_mut();
        for (((param, grad), m), v) in
            params.into_iter().zip(grad_slices).zip(self.m.iter_mut()).zip(self.v.iter_mut())
        {
            use rayon::prelude::*;
            const CHUNK: usize = 1 << 16;
            param
                .par_chunks_mut(CHUNK)
                .zip(m.par_chunks_mut(CHUNK))
                .zip(v.par_chunks_mut(CHUNK))
                .zip(grad.par_chunks(CHUNK))
                .for_each(|(((p, m), v), g)| {
                    for i in 0..p.len() {
                        m[i] = b1 * m[i] + (one - b1) * g[i];
                        v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                        let m_hat = m[i] / corr1;
                        let v_hat = v[i] / corr2;
                        p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
                    }
                });
        }
    }
}

/// Blends online parameters into the target: `t <- (1-alpha) t + alpha o`.
pub fn soft_update<T: Real>(target: &mut Network<T>, online: &Network<T>, alpha: f64) {
    let a = T::scalar(alpha);
    let one = T::one();
    let online_slices = online.param_slices();
    let target_slices = target.param_slices_mut();
    for (t, o) in target_slices.into_iter().zip(online_slices) {
        use rayon::prelude::*;
        const CHUNK: usize = 1 << 16;
        t.par_chunks_mut(CHUNK).zip(o.par_chunks(CHUNK)).for_each(|(t, o)| {
            for i in 0..t.len() {
                t[i] = (one - a) * t[i] + a * o[i];
            }
        });
    }
}
