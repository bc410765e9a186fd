//! Layers, networks, and reverse-mode gradients via explicit tapes.
//!
//! The expert architecture is fixed, so there is no general autodiff graph:
//! each forward pass records exactly the per-layer intermediates its
//! backward pass needs.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::adam::AdamTarget;
use crate::nn::matrix::Matrix;

/// Elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Relu,
    /// Clamp to `[lo, hi]`; requires `lo < hi`.
    HardTanh { lo: f64, hi: f64 },
}

impl Activation {
    pub fn hard_tanh(lo: f64, hi: f64) -> Result<Self> {
        if lo < hi {
            Ok(Activation::HardTanh { lo, hi })
        } else {
            Err(Error::InvalidArgument(format!(
                "HardTanh requires lo < hi, got [{lo}, {hi}]"
            )))
        }
    }

    fn apply(&self, x: f64) -> f64 {
        match *self {
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Relu => x.max(0.0),
            Activation::HardTanh { lo, hi } => x.clamp(lo, hi),
        }
    }

    fn grad(&self, x: f64) -> f64 {
        match *self {
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::HardTanh { lo, hi } => {
                if x > lo && x < hi {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Weight initialization for dense layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Zeros,
    /// Xavier/Glorot uniform.
    Xavier,
}

/// Affine layer `y = x Wᵀ + b`; weights are `out x in`, row-major.
///
/// Gradient and Adam-moment buffers live next to the parameters they
/// belong to; `backward` overwrites the gradients on every call.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    pub w: Matrix,
    pub b: Vec<f64>,
    pub gw: Matrix,
    pub gb: Vec<f64>,
    mw: Matrix,
    vw: Matrix,
    mb: Vec<f64>,
    vb: Vec<f64>,
}

impl DenseLayer {
    pub fn new(in_dim: usize, out_dim: usize, init: Init, rng: &mut impl Rng) -> Self {
        let mut w = Matrix::zeros(out_dim, in_dim);
        if init == Init::Xavier {
            let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
            for v in w.data_mut() {
                *v = rng.gen_range(-limit..limit);
            }
        }
        Self::from_weights(w, vec![0.0; out_dim])
    }

    pub fn from_weights(w: Matrix, b: Vec<f64>) -> Self {
        let (out_dim, in_dim) = (w.rows(), w.cols());
        assert_eq!(b.len(), out_dim, "bias length");
        DenseLayer {
            in_dim,
            out_dim,
            gw: Matrix::zeros(out_dim, in_dim),
            gb: vec![0.0; out_dim],
            mw: Matrix::zeros(out_dim, in_dim),
            vw: Matrix::zeros(out_dim, in_dim),
            mb: vec![0.0; out_dim],
            vb: vec![0.0; out_dim],
            w,
            b,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn forward(&self, x: &Matrix) -> Matrix {
        let mut y = x.matmul_nt(&self.w);
        for i in 0..y.rows() {
            let row = y.row_mut(i);
            for (v, b) in row.iter_mut().zip(&self.b) {
                *v += b;
            }
        }
        y
    }

    /// Writes `gw`/`gb` and returns the input gradient.
    fn backward(&mut self, input: &Matrix, d_out: &Matrix) -> Matrix {
        self.gw = d_out.matmul_tn(input);
        for j in 0..self.out_dim {
            let mut s = 0.0;
            for i in 0..d_out.rows() {
                s += d_out.get(i, j);
            }
            self.gb[j] = s;
        }
        d_out.matmul(&self.w)
    }

    fn adam_targets(&mut self) -> Vec<AdamTarget<'_>> {
        vec![
            AdamTarget {
                params: self.w.data_mut(),
                grads: self.gw.data(),
                m: self.mw.data_mut(),
                v: self.vw.data_mut(),
            },
            AdamTarget {
                params: &mut self.b,
                grads: &self.gb,
                m: &mut self.mb,
                v: &mut self.vb,
            },
        ]
    }
}

/// Per-feature batch normalization.
///
/// Train mode normalizes with the batch mean and biased batch variance and
/// folds them into the running statistics with weight `momentum`; eval mode
/// normalizes with the running statistics.
#[derive(Debug, Clone)]
pub struct BatchNormLayer {
    dim: usize,
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
    pub gscale: Vec<f64>,
    pub gshift: Vec<f64>,
    mscale: Vec<f64>,
    vscale: Vec<f64>,
    mshift: Vec<f64>,
    vshift: Vec<f64>,
}

impl BatchNormLayer {
    pub fn new(dim: usize) -> Self {
        BatchNormLayer {
            dim,
            scale: vec![1.0; dim],
            shift: vec![0.0; dim],
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: 0.1,
            epsilon: 1e-5,
            gscale: vec![0.0; dim],
            gshift: vec![0.0; dim],
            mscale: vec![0.0; dim],
            vscale: vec![0.0; dim],
            mshift: vec![0.0; dim],
            vshift: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn forward_train(&mut self, x: &Matrix) -> (Matrix, Matrix, Vec<f64>) {
        let n = x.rows() as f64;
        let mut mean = vec![0.0; self.dim];
        let mut var = vec![0.0; self.dim];
        for i in 0..x.rows() {
            for (j, &v) in x.row(i).iter().enumerate() {
                mean[j] += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        for i in 0..x.rows() {
            for (j, &v) in x.row(i).iter().enumerate() {
                let d = v - mean[j];
                var[j] += d * d;
            }
        }
        for v in &mut var {
            *v /= n;
        }

        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + self.epsilon).sqrt()).collect();
        let mut x_hat = Matrix::zeros(x.rows(), self.dim);
        let mut y = Matrix::zeros(x.rows(), self.dim);
        for i in 0..x.rows() {
            for j in 0..self.dim {
                let h = (x.get(i, j) - mean[j]) * inv_std[j];
                x_hat.set(i, j, h);
                y.set(i, j, self.scale[j] * h + self.shift[j]);
            }
        }
        for j in 0..self.dim {
            self.running_mean[j] = (1.0 - self.momentum) * self.running_mean[j] + self.momentum * mean[j];
            self.running_var[j] = (1.0 - self.momentum) * self.running_var[j] + self.momentum * var[j];
        }
        (y, x_hat, inv_std)
    }

    fn forward_eval(&self, x: &Matrix) -> Matrix {
        let mut y = Matrix::zeros(x.rows(), self.dim);
        for i in 0..x.rows() {
            for j in 0..self.dim {
                let inv = 1.0 / (self.running_var[j] + self.epsilon).sqrt();
                y.set(i, j, self.scale[j] * (x.get(i, j) - self.running_mean[j]) * inv + self.shift[j]);
            }
        }
        y
    }

    fn backward(&mut self, x_hat: &Matrix, inv_std: &[f64], d_out: &Matrix) -> Matrix {
        let n = d_out.rows();
        let nf = n as f64;
        let mut sum_d = vec![0.0; self.dim];
        let mut sum_dh = vec![0.0; self.dim];
        for i in 0..n {
            for j in 0..self.dim {
                let d = d_out.get(i, j);
                sum_d[j] += d;
                sum_dh[j] += d * x_hat.get(i, j);
            }
        }
        for j in 0..self.dim {
            self.gshift[j] = sum_d[j];
            self.gscale[j] = sum_dh[j];
        }
        let mut dx = Matrix::zeros(n, self.dim);
        for i in 0..n {
            for j in 0..self.dim {
                let d_xhat = d_out.get(i, j) * self.scale[j];
                let term = nf * d_xhat - self.scale[j] * sum_d[j] - x_hat.get(i, j) * self.scale[j] * sum_dh[j];
                dx.set(i, j, inv_std[j] * term / nf);
            }
        }
        dx
    }

    fn adam_targets(&mut self) -> Vec<AdamTarget<'_>> {
        vec![
            AdamTarget {
                params: &mut self.scale,
                grads: &self.gscale,
                m: &mut self.mscale,
                v: &mut self.vscale,
            },
            AdamTarget {
                params: &mut self.shift,
                grads: &self.gshift,
                m: &mut self.mshift,
                v: &mut self.vshift,
            },
        ]
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(DenseLayer),
    BatchNorm(BatchNormLayer),
    Activation(Activation),
}

impl Layer {
    fn in_dim(&self) -> Option<usize> {
        match self {
            Layer::Dense(d) => Some(d.in_dim()),
            Layer::BatchNorm(b) => Some(b.dim()),
            Layer::Activation(_) => None,
        }
    }

    fn out_dim(&self) -> Option<usize> {
        match self {
            Layer::Dense(d) => Some(d.out_dim()),
            Layer::BatchNorm(b) => Some(b.dim()),
            Layer::Activation(_) => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            Layer::Dense(d) => format!("Dense {}->{}", d.in_dim(), d.out_dim()),
            Layer::BatchNorm(b) => format!("BatchNorm {}", b.dim()),
            Layer::Activation(a) => format!("{a:?}"),
        }
    }
}

/// Whether batch normalization uses batch statistics (and updates the
/// running ones) or the stored running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug)]
enum TapeEntry {
    Dense { input: Matrix },
    BatchNorm { x_hat: Matrix, inv_std: Vec<f64> },
    BatchNormEval,
    Activation { input: Matrix },
}

/// Intermediates recorded by one forward pass, consumed by `backward`.
#[derive(Debug)]
pub struct Tape {
    mode: Mode,
    entries: Vec<TapeEntry>,
    output_rows: usize,
    output_cols: usize,
}

impl Tape {
    pub fn mode(&self) -> Mode {
        self.mode
    }
}

/// An ordered stack of layers with consistent widths.
#[derive(Debug, Clone, Default)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let mut width: Option<usize> = None;
        for (idx, layer) in layers.iter().enumerate() {
            if let (Some(w), Some(need)) = (width, layer.in_dim()) {
                if w != need {
                    return Err(Error::shape(
                        format!("layer {idx} ({})", layer.describe()),
                        format!("input width {need}"),
                        format!("width {w}"),
                    ));
                }
            }
            if let Some(out) = layer.out_dim() {
                width = Some(out);
            }
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Width expected by the first shaped layer, if any.
    pub fn input_dim(&self) -> Option<usize> {
        self.layers.iter().find_map(Layer::in_dim)
    }

    /// Width produced by the last shaped layer, if any.
    pub fn output_dim(&self) -> Option<usize> {
        self.layers.iter().rev().find_map(Layer::out_dim)
    }

    /// Runs the batch through the network.
    ///
    /// Train mode records a tape for [`Mlp::backward`] and makes batch
    /// normalization use (and update with) batch statistics; eval mode uses
    /// running statistics and yields a tape that refuses backward passes.
    pub fn forward(&mut self, batch: &Matrix, mode: Mode) -> Result<(Matrix, Tape)> {
        if let Some(need) = self.input_dim() {
            if batch.cols() != need {
                return Err(Error::shape(
                    format!("forward through {}", self.layers[0].describe()),
                    format!("{need} columns"),
                    format!("{} columns", batch.cols()),
                ));
            }
        }
        let mut entries = Vec::with_capacity(self.layers.len());
        let mut current = batch.clone();
        for (idx, layer) in self.layers.iter_mut().enumerate() {
            if let Some(need) = layer.in_dim() {
                if current.cols() != need {
                    return Err(Error::shape(
                        format!("layer {idx} ({})", layer.describe()),
                        format!("{need} columns"),
                        format!("{} columns", current.cols()),
                    ));
                }
            }
            current = match layer {
                Layer::Dense(d) => {
                    let input = std::mem::replace(&mut current, Matrix::zeros(0, 0));
                    let out = d.forward(&input);
                    entries.push(TapeEntry::Dense { input });
                    out
                }
                Layer::BatchNorm(b) => match mode {
                    Mode::Train => {
                        let (y, x_hat, inv_std) = b.forward_train(&current);
                        entries.push(TapeEntry::BatchNorm { x_hat, inv_std });
                        y
                    }
                    Mode::Eval => {
                        entries.push(TapeEntry::BatchNormEval);
                        b.forward_eval(&current)
                    }
                },
                Layer::Activation(a) => {
                    let input = std::mem::replace(&mut current, Matrix::zeros(0, 0));
                    let out = input.map(|x| a.apply(x));
                    entries.push(TapeEntry::Activation { input });
                    out
                }
            };
        }
        debug_assert!(current.is_finite(), "non-finite activations");
        let tape = Tape {
            mode,
            entries,
            output_rows: current.rows(),
            output_cols: current.cols(),
        };
        Ok((current, tape))
    }

    /// Inference without tape recording or running-stat updates.
    pub fn infer(&self, batch: &Matrix) -> Result<Matrix> {
        let mut current = batch.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            if let Some(need) = layer.in_dim() {
                if current.cols() != need {
                    return Err(Error::shape(
                        format!("layer {idx} ({})", layer.describe()),
                        format!("{need} columns"),
                        format!("{} columns", current.cols()),
                    ));
                }
            }
            current = match layer {
                Layer::Dense(d) => d.forward(&current),
                Layer::BatchNorm(b) => b.forward_eval(&current),
                Layer::Activation(a) => current.map(|x| a.apply(x)),
            };
        }
        Ok(current)
    }

    /// Populates every parameter gradient from the tape and returns the
    /// gradient with respect to the batch that produced it.
    pub fn backward(&mut self, tape: &Tape, upstream: &Matrix) -> Result<Matrix> {
        if tape.mode == Mode::Eval {
            return Err(Error::EvalTapeBackward);
        }
        if (upstream.rows(), upstream.cols()) != (tape.output_rows, tape.output_cols) {
            return Err(Error::shape(
                "backward",
                format!("{}x{}", tape.output_rows, tape.output_cols),
                format!("{}x{}", upstream.rows(), upstream.cols()),
            ));
        }
        let mut grad = upstream.clone();
        for (layer, entry) in self.layers.iter_mut().zip(&tape.entries).rev() {
            grad = match (layer, entry) {
                (Layer::Dense(d), TapeEntry::Dense { input }) => d.backward(input, &grad),
                (Layer::BatchNorm(b), TapeEntry::BatchNorm { x_hat, inv_std }) => {
                    b.backward(x_hat, inv_std, &grad)
                }
                (Layer::Activation(a), TapeEntry::Activation { input }) => {
                    let mut dx = Matrix::zeros(grad.rows(), grad.cols());
                    for i in 0..grad.rows() {
                        for j in 0..grad.cols() {
                            dx.set(i, j, grad.get(i, j) * a.grad(input.get(i, j)));
                        }
                    }
                    dx
                }
                _ => {
                    return Err(Error::InvalidArgument(
                        "tape does not match network structure".into(),
                    ))
                }
            };
        }
        Ok(grad)
    }

    /// Parameter/gradient/moment views for the Adam update.
    pub fn adam_targets(&mut self) -> Vec<AdamTarget<'_>> {
        let mut targets = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => targets.extend(d.adam_targets()),
                Layer::BatchNorm(b) => targets.extend(b.adam_targets()),
                Layer::Activation(_) => {}
            }
        }
        targets
    }

    /// Flat copy of all trainable parameters, in layer order.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.extend_from_slice(d.w.data());
                    out.extend_from_slice(&d.b);
                }
                Layer::BatchNorm(b) => {
                    out.extend_from_slice(&b.scale);
                    out.extend_from_slice(&b.shift);
                }
                Layer::Activation(_) => {}
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => d.w.data().len() + d.b.len(),
                Layer::BatchNorm(b) => b.scale.len() + b.shift.len(),
                Layer::Activation(_) => 0,
            })
            .sum()
    }
}

/// A hidden block as used throughout the expert networks:
/// dense, then batch norm, then leaky ReLU.
pub(crate) fn hidden_block(in_dim: usize, out_dim: usize, slope: f64, rng: &mut impl Rng) -> Vec<Layer> {
    vec![
        Layer::Dense(DenseLayer::new(in_dim, out_dim, Init::Xavier, rng)),
        Layer::BatchNorm(BatchNormLayer::new(out_dim)),
        Layer::Activation(Activation::LeakyRelu { slope }),
    ]
}
