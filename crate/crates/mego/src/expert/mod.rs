//! The expert model: a VAE over one instance's solution space plus a latent
//! score predictor, trained on that instance's experience set.
//!
//! An expert is trained once per solved instance and frozen; the solving
//! pipeline later clones it, retrains only the decoder, and uses it to map
//! good known solutions into a new instance's solution space.
//!
//! Solutions enter the networks as 0.0/1.0 floats and leave the decoder
//! through a HardTanh clamped to [0, 1], so the binarization threshold 0.5
//! bisects the output range. Scores are min-max normalized in maximization
//! orientation: 1 is always the best observed value, whatever the raw
//! objective's sense.

mod io;

pub use io::{load_expert, read_experience, save_expert, write_experience};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::nn::hidden_block;
use crate::nn::{
    mse, mse_grad, Activation, AdamState, AdamTarget, DenseLayer, Init, Layer, Matrix, Mlp, Mode,
};
use crate::problems::Sense;
use crate::rng::standard_normal;

/// Solved-instance record: `(solution, objective)` pairs plus metadata.
#[derive(Debug, Clone)]
pub struct ExperienceSet {
    pub instance_id: String,
    pub class_name: String,
    pub dim: usize,
    pub sense: Sense,
    pub pairs: Vec<(BitVector, f64)>,
}

impl ExperienceSet {
    pub fn new(
        instance_id: impl Into<String>,
        class_name: impl Into<String>,
        dim: usize,
        sense: Sense,
        pairs: Vec<(BitVector, f64)>,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("experience set must be non-empty".into()));
        }
        for (x, y) in &pairs {
            if x.len() != dim {
                return Err(Error::shape(
                    "experience set",
                    format!("{dim} bits"),
                    format!("{} bits", x.len()),
                ));
            }
            if !y.is_finite() {
                return Err(Error::InvalidArgument("experience objective must be finite".into()));
            }
        }
        Ok(ExperienceSet {
            instance_id: instance_id.into(),
            class_name: class_name.into(),
            dim,
            sense,
            pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Min-max bounds of the oriented scores, kept to invert normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub y_min: f64,
    pub y_max: f64,
}

impl NormStats {
    /// Maps an oriented raw value into [0, 1]; degenerate sets (all values
    /// equal) map everything to 0.5.
    pub fn normalize(&self, oriented: f64) -> f64 {
        if self.y_max == self.y_min {
            0.5
        } else {
            (oriented - self.y_min) / (self.y_max - self.y_min)
        }
    }

    /// Inverts [`NormStats::normalize`] back to a raw value of the given
    /// sense.
    pub fn denormalize(&self, normalized: f64, sense: Sense) -> f64 {
        let oriented = if self.y_max == self.y_min {
            self.y_min
        } else {
            self.y_min + normalized * (self.y_max - self.y_min)
        };
        match sense {
            Sense::Maximize => oriented,
            Sense::Minimize => -oriented,
        }
    }
}

/// Min-max scales the scores into [0, 1] in maximization orientation.
///
/// Minimization objectives are negated before scaling, so 1 is the best
/// observed value either way. The returned stats refer to the oriented
/// values.
pub fn normalize_scores(e: &ExperienceSet) -> (ExperienceSet, NormStats) {
    let oriented: Vec<f64> = e.pairs.iter().map(|(_, y)| e.sense.orient(*y)).collect();
    let y_min = oriented.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = oriented.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let stats = NormStats { y_min, y_max };
    let pairs = e
        .pairs
        .iter()
        .zip(&oriented)
        .map(|((x, _), &o)| (x.clone(), stats.normalize(o)))
        .collect();
    let normalized = ExperienceSet {
        instance_id: e.instance_id.clone(),
        class_name: e.class_name.clone(),
        dim: e.dim,
        sense: e.sense,
        pairs,
    };
    (normalized, stats)
}

/// Network widths; the defaults are the reference configuration used by
/// every user-facing path. Smaller widths exist for experimentation and
/// fast tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpertArchitecture {
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub predictor_hidden: Vec<usize>,
    /// Latent width as a multiple of the input dimensionality.
    pub latent_per_dim: usize,
    pub leaky_slope: f64,
}

impl Default for ExpertArchitecture {
    fn default() -> Self {
        ExpertArchitecture {
            encoder_hidden: vec![64, 128, 128, 64],
            decoder_hidden: vec![64, 128, 128, 64],
            predictor_hidden: vec![128, 256, 512, 1024, 512, 256, 128],
            latent_per_dim: 4,
            leaky_slope: 0.01,
        }
    }
}

impl ExpertArchitecture {
    /// A small configuration for tests and quick experiments.
    pub fn compact() -> Self {
        ExpertArchitecture {
            encoder_hidden: vec![32, 32],
            decoder_hidden: vec![32, 32],
            predictor_hidden: vec![64, 64],
            latent_per_dim: 4,
            leaky_slope: 0.01,
        }
    }
}

/// Hyper-parameters of the joint training objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Weight of the score-prediction loss.
    pub lambda: f64,
    /// Weight of the KL regularizer.
    pub gamma: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1.0,
            gamma: 0.0025,
            lr: 0.0005,
            batch_size: 1024,
            epochs: 200,
        }
    }
}

/// Loss terms of one pass; `total` is `reconstruction + lambda score +
/// gamma kl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub reconstruction: f64,
    pub score: f64,
    pub kl: f64,
    pub total: f64,
}

/// Per-epoch loss trajectory of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<LossTerms>,
}

/// Encoder, decoder and latent score predictor for one training instance.
#[derive(Debug, Clone)]
pub struct ExpertModel {
    pub instance_id: String,
    pub dim: usize,
    pub latent_dim: usize,
    pub norm: NormStats,
    pub(crate) encoder_trunk: Mlp,
    pub(crate) mu_head: Mlp,
    pub(crate) logvar_head: Mlp,
    pub(crate) decoder: Mlp,
    pub(crate) predictor: Mlp,
}

impl ExpertModel {
    /// A freshly initialized expert with decoder output width `dim`.
    pub fn new(
        instance_id: impl Into<String>,
        dim: usize,
        arch: &ExpertArchitecture,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("expert dimension must be positive".into()));
        }
        let latent_dim = arch.latent_per_dim * dim;
        let slope = arch.leaky_slope;

        let mut trunk_layers = Vec::new();
        let mut width = dim;
        for &h in &arch.encoder_hidden {
            trunk_layers.extend(hidden_block(width, h, slope, rng));
            width = h;
        }
        let encoder_trunk = Mlp::new(trunk_layers)?;
        let mu_head = Mlp::new(vec![Layer::Dense(DenseLayer::new(width, latent_dim, Init::Xavier, rng))])?;
        let logvar_head =
            Mlp::new(vec![Layer::Dense(DenseLayer::new(width, latent_dim, Init::Xavier, rng))])?;

        let mut decoder_layers = Vec::new();
        let mut width = latent_dim;
        for &h in &arch.decoder_hidden {
            decoder_layers.extend(hidden_block(width, h, slope, rng));
            width = h;
        }
        decoder_layers.push(Layer::Dense(DenseLayer::new(width, dim, Init::Xavier, rng)));
        decoder_layers.push(Layer::Activation(Activation::hard_tanh(0.0, 1.0)?));
        let decoder = Mlp::new(decoder_layers)?;

        let mut predictor_layers = Vec::new();
        let mut width = latent_dim;
        for &h in &arch.predictor_hidden {
            predictor_layers.extend(hidden_block(width, h, slope, rng));
            width = h;
        }
        predictor_layers.push(Layer::Dense(DenseLayer::new(width, 1, Init::Xavier, rng)));
        predictor_layers.push(Layer::Activation(Activation::Relu));
        let predictor = Mlp::new(predictor_layers)?;

        Ok(ExpertModel {
            instance_id: instance_id.into(),
            dim,
            latent_dim,
            norm: NormStats { y_min: 0.0, y_max: 1.0 },
            encoder_trunk,
            mu_head,
            logvar_head,
            decoder,
            predictor,
        })
    }

    /// Width of the decoder's final layer (changes after dimension
    /// adaptation).
    pub fn decoder_output_dim(&self) -> usize {
        self.decoder.output_dim().expect("decoder has dense layers")
    }

    /// Replaces the decoder's final dense layer with a fresh
    /// Xavier-initialized one of the given width.
    pub fn replace_decoder_output(&mut self, new_dim: usize, rng: &mut impl Rng) {
        let layers = self.decoder.layers_mut();
        let dense_idx = layers.len() - 2;
        let in_dim = match &layers[dense_idx] {
            Layer::Dense(d) => d.in_dim(),
            _ => unreachable!("decoder ends with dense + hard-tanh"),
        };
        layers[dense_idx] = Layer::Dense(DenseLayer::new(in_dim, new_dim, Init::Xavier, rng));
    }

    fn batch_from_bits(inputs: &[BitVector], dim: usize) -> Result<Matrix> {
        let mut data = Vec::with_capacity(inputs.len() * dim);
        for x in inputs {
            if x.len() != dim {
                return Err(Error::shape("expert input", format!("{dim} bits"), format!("{} bits", x.len())));
            }
            data.extend(x.to_floats());
        }
        Matrix::from_vec(inputs.len(), dim, data)
    }

    /// Eval-mode encoder mean for a batch of solutions.
    pub fn encode_mean(&self, inputs: &[BitVector]) -> Result<Matrix> {
        let batch = Self::batch_from_bits(inputs, self.dim)?;
        let h = self.encoder_trunk.infer(&batch)?;
        self.mu_head.infer(&h)
    }

    /// Eval-mode encoder mean and log-variance for a float batch.
    pub fn encode_stats(&self, batch: &Matrix) -> Result<(Matrix, Matrix)> {
        let h = self.encoder_trunk.infer(batch)?;
        Ok((self.mu_head.infer(&h)?, self.logvar_head.infer(&h)?))
    }

    /// Deterministic predicted score of one solution: the predictor applied
    /// to the encoder mean. Non-negative by construction.
    pub fn predict_score(&self, x: &BitVector) -> Result<f64> {
        Ok(self.predict_scores(std::slice::from_ref(x))?[0])
    }

    /// Batch variant of [`ExpertModel::predict_score`].
    pub fn predict_scores(&self, inputs: &[BitVector]) -> Result<Vec<f64>> {
        let mu = self.encode_mean(inputs)?;
        let scores = self.predictor.infer(&mu)?;
        Ok((0..scores.rows()).map(|i| scores.get(i, 0)).collect())
    }

    /// Decodes a latent point and thresholds at 0.5 (ties map to 1).
    pub fn decode_binarize(&self, z: &[f64]) -> Result<BitVector> {
        let out = self.decoder.infer(&Matrix::row_vector(z))?;
        Ok(binarize_row(out.row(0)))
    }

    /// One train-mode pass of the joint objective with explicit latent
    /// noise `eps`; gradients are populated when `compute_grads` is set.
    ///
    /// `x` is the batch of solutions, `y` the column of normalized scores,
    /// `eps` a `batch x latent` matrix of N(0,1) draws.
    pub fn training_pass(
        &mut self,
        x: &Matrix,
        y: &Matrix,
        eps: &Matrix,
        lambda: f64,
        gamma: f64,
        compute_grads: bool,
    ) -> Result<LossTerms> {
        let n = x.rows();
        if y.rows() != n || y.cols() != 1 {
            return Err(Error::shape("training_pass targets", format!("{n}x1"), format!("{}x{}", y.rows(), y.cols())));
        }
        if eps.rows() != n || eps.cols() != self.latent_dim {
            return Err(Error::shape(
                "training_pass noise",
                format!("{n}x{}", self.latent_dim),
                format!("{}x{}", eps.rows(), eps.cols()),
            ));
        }
        let (h, trunk_tape) = self.encoder_trunk.forward(x, Mode::Train)?;
        let (mu, mu_tape) = self.mu_head.forward(&h, Mode::Train)?;
        let (logvar, lv_tape) = self.logvar_head.forward(&h, Mode::Train)?;

        let sigma = logvar.map(|l| (0.5 * l).exp());
        let mut z = Matrix::zeros(n, self.latent_dim);
        for i in 0..n {
            for j in 0..self.latent_dim {
                z.set(i, j, mu.get(i, j) + sigma.get(i, j) * eps.get(i, j));
            }
        }

        let (x_rec, dec_tape) = self.decoder.forward(&z, Mode::Train)?;
        let (y_pred, pred_tape) = self.predictor.forward(&z, Mode::Train)?;

        let reconstruction = mse(&x_rec, x)?;
        let score = mse(&y_pred, y)?;
        let mut kl = 0.0;
        for i in 0..n {
            for j in 0..self.latent_dim {
                let m = mu.get(i, j);
                let l = logvar.get(i, j);
                kl += -0.5 * (1.0 + l - m * m - l.exp());
            }
        }
        kl /= n as f64;
        let total = reconstruction + lambda * score + gamma * kl;

        if compute_grads {
            let d_xrec = mse_grad(&x_rec, x);
            let dz_dec = self.decoder.backward(&dec_tape, &d_xrec)?;
            let mut d_ypred = mse_grad(&y_pred, y);
            for v in d_ypred.data_mut() {
                *v *= lambda;
            }
            let dz_pred = self.predictor.backward(&pred_tape, &d_ypred)?;

            let nf = n as f64;
            let mut d_mu = Matrix::zeros(n, self.latent_dim);
            let mut d_logvar = Matrix::zeros(n, self.latent_dim);
            for i in 0..n {
                for j in 0..self.latent_dim {
                    let dz = dz_dec.get(i, j) + dz_pred.get(i, j);
                    d_mu.set(i, j, dz + gamma * mu.get(i, j) / nf);
                    let dl_from_z = dz * eps.get(i, j) * sigma.get(i, j) * 0.5;
                    let dl_from_kl = gamma * (logvar.get(i, j).exp() - 1.0) / (2.0 * nf);
                    d_logvar.set(i, j, dl_from_z + dl_from_kl);
                }
            }
            let dh_mu = self.mu_head.backward(&mu_tape, &d_mu)?;
            let dh_lv = self.logvar_head.backward(&lv_tape, &d_logvar)?;
            self.encoder_trunk.backward(&trunk_tape, &dh_mu.add(&dh_lv))?;
        }

        Ok(LossTerms {
            reconstruction,
            score,
            kl,
            total,
        })
    }

    /// One decoder-only pass of the mapping loss `mse(decoder(z), target)`.
    ///
    /// The latent batch `z` comes from the frozen encoder; only decoder
    /// gradients are produced.
    pub fn finetune_pass(&mut self, z: &Matrix, target: &Matrix, compute_grads: bool) -> Result<f64> {
        let (out, tape) = self.decoder.forward(z, Mode::Train)?;
        let loss = mse(&out, target)?;
        if compute_grads {
            let d_out = mse_grad(&out, target);
            self.decoder.backward(&tape, &d_out)?;
        }
        Ok(loss)
    }

    /// Adam views over every trainable parameter (encoder, decoder,
    /// predictor).
    pub fn adam_targets(&mut self) -> Vec<AdamTarget<'_>> {
        let mut targets = self.encoder_trunk.adam_targets();
        targets.extend(self.mu_head.adam_targets());
        targets.extend(self.logvar_head.adam_targets());
        targets.extend(self.decoder.adam_targets());
        targets.extend(self.predictor.adam_targets());
        targets
    }

    /// Adam views over the decoder parameters only.
    pub fn decoder_adam_targets(&mut self) -> Vec<AdamTarget<'_>> {
        self.decoder.adam_targets()
    }

    /// Flat copies of the parameter vectors, used to verify freeze
    /// contracts.
    pub fn parameter_snapshot(&self) -> ExpertParameters {
        ExpertParameters {
            encoder: {
                let mut p = self.encoder_trunk.parameters();
                p.extend(self.mu_head.parameters());
                p.extend(self.logvar_head.parameters());
                p
            },
            decoder: self.decoder.parameters(),
            predictor: self.predictor.parameters(),
        }
    }
}

/// Flat parameter vectors by component.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertParameters {
    pub encoder: Vec<f64>,
    pub decoder: Vec<f64>,
    pub predictor: Vec<f64>,
}

pub(crate) fn binarize_row(row: &[f64]) -> BitVector {
    let mut out = BitVector::zeros(row.len());
    for (i, &v) in row.iter().enumerate() {
        out.set(i, u8::from(v >= 0.5));
    }
    out
}

/// Trains an expert on a normalized experience set.
///
/// `experience` must already be normalized (see [`normalize_scores`]);
/// `norm` are the stats that normalization produced. The report carries the
/// per-epoch loss terms averaged over samples.
pub fn train_expert(
    experience: &ExperienceSet,
    norm: NormStats,
    arch: &ExpertArchitecture,
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<(ExpertModel, TrainReport)> {
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::InvalidArgument("batch_size and epochs must be positive".into()));
    }
    let mut model = ExpertModel::new(&experience.instance_id, experience.dim, arch, rng)?;
    model.norm = norm;

    let n = experience.len();
    let xs: Vec<&BitVector> = experience.pairs.iter().map(|(x, _)| x).collect();
    let ys: Vec<f64> = experience.pairs.iter().map(|(_, y)| *y).collect();

    let mut adam = AdamState::new(cfg.lr);
    let mut report = TrainReport { epochs: Vec::with_capacity(cfg.epochs) };
    let mut order: Vec<usize> = (0..n).collect();

    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        let mut sums = LossTerms { reconstruction: 0.0, score: 0.0, kl: 0.0, total: 0.0 };
        for chunk in order.chunks(cfg.batch_size) {
            let mut x_data = Vec::with_capacity(chunk.len() * experience.dim);
            let mut y_data = Vec::with_capacity(chunk.len());
            for &idx in chunk {
                x_data.extend(xs[idx].to_floats());
                y_data.push(ys[idx]);
            }
            let x = Matrix::from_vec(chunk.len(), experience.dim, x_data)?;
            let y = Matrix::from_vec(chunk.len(), 1, y_data)?;
            let mut eps = Matrix::zeros(chunk.len(), model.latent_dim);
            for v in eps.data_mut() {
                *v = standard_normal(rng);
            }
            let losses = model.training_pass(&x, &y, &eps, cfg.lambda, cfg.gamma, true)?;
            adam.step(&mut model.adam_targets())?;
            let w = chunk.len() as f64;
            sums.reconstruction += losses.reconstruction * w;
            sums.score += losses.score * w;
            sums.kl += losses.kl * w;
            sums.total += losses.total * w;
        }
        let nf = n as f64;
        report.epochs.push(LossTerms {
            reconstruction: sums.reconstruction / nf,
            score: sums.score / nf,
            kl: sums.kl / nf,
            total: sums.total / nf,
        });
    }
    Ok((model, report))
}
