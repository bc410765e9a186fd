//! Experience-set files and expert checkpoints.
//!
//! Experience sets are line-oriented text:
//!
//! ```text
//! MEGO-EXP v1 id=om-16-0 class=OM dim=16 sense=max n=2000
//! 0110... 12.0
//! ```
//!
//! Checkpoints are a single JSON document holding metadata, normalization
//! stats, and every parameter and running-stat array, with floats printed
//! at full precision so a load reproduces the model bit-exactly.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expert::{ExperienceSet, ExpertModel, NormStats};
use crate::nn::{Activation, BatchNormLayer, DenseLayer, Layer, Matrix, Mlp};
use crate::problems::Sense;
use crate::textio;
use crate::BitVector;

pub fn write_experience(e: &ExperienceSet, path: impl AsRef<Path>) -> Result<()> {
    for (what, value) in [("id", &e.instance_id), ("class", &e.class_name)] {
        if value.contains(char::is_whitespace) || value.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "experience {what} {value:?} must be non-empty and free of whitespace"
            )));
        }
    }
    let mut out = Vec::new();
    writeln!(
        out,
        "MEGO-EXP v1 id={} class={} dim={} sense={} n={}",
        e.instance_id,
        e.class_name,
        e.dim,
        e.sense.as_str(),
        e.pairs.len()
    )?;
    for (x, y) in &e.pairs {
        writeln!(out, "{x} {y:.17e}")?;
    }
    textio::atomic_write(path, &out)
}

pub fn read_experience(path: impl AsRef<Path>) -> Result<ExperienceSet> {
    let path = path.as_ref();
    let context = path.display().to_string();
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&context, "empty file"))??;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("MEGO-EXP") || tokens.next() != Some("v1") {
        return Err(Error::parse(&context, "expected header 'MEGO-EXP v1 ...'"));
    }
    let mut id = None;
    let mut class = None;
    let mut dim = None;
    let mut sense = None;
    let mut n = None;
    for token in tokens {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::parse(&context, format!("bad header token {token:?}")))?;
        match key {
            "id" => id = Some(value.to_string()),
            "class" => class = Some(value.to_string()),
            "dim" => dim = Some(value.parse::<usize>().map_err(|e| Error::parse(&context, e.to_string()))?),
            "sense" => sense = Some(Sense::parse(value)?),
            "n" => n = Some(value.parse::<usize>().map_err(|e| Error::parse(&context, e.to_string()))?),
            other => return Err(Error::parse(&context, format!("unknown header key {other:?}"))),
        }
    }
    let (id, class, dim, sense, n) = match (id, class, dim, sense, n) {
        (Some(a), Some(b), Some(c), Some(d), Some(e)) => (a, b, c, d, e),
        _ => return Err(Error::parse(&context, "header missing id/class/dim/sense/n")),
    };

    let mut pairs = Vec::with_capacity(n);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (bits, y) = line
            .split_once(' ')
            .ok_or_else(|| Error::parse(&context, format!("bad pair line {line:?}")))?;
        let x = BitVector::parse(bits)?;
        if x.len() != dim {
            return Err(Error::parse(
                &context,
                format!("bitstring length {} does not match dim {dim}", x.len()),
            ));
        }
        let y: f64 = y.trim().parse().map_err(|e| Error::parse(&context, format!("bad objective: {e}")))?;
        pairs.push((x, y));
    }
    if pairs.len() != n {
        return Err(Error::parse(
            &context,
            format!("header declares n={n} but found {} pairs", pairs.len()),
        ));
    }
    ExperienceSet::new(id, class, dim, sense, pairs)
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    instance_id: String,
    dim: usize,
    latent_dim: usize,
    norm: NormStats,
    encoder_trunk: MlpDto,
    mu_head: MlpDto,
    logvar_head: MlpDto,
    decoder: MlpDto,
    predictor: MlpDto,
}

#[derive(Serialize, Deserialize)]
struct MlpDto {
    layers: Vec<LayerDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
enum LayerDto {
    #[serde(rename = "dense")]
    Dense {
        out: usize,
        #[serde(rename = "in")]
        input: usize,
        w: Vec<f64>,
        b: Vec<f64>,
    },
    #[serde(rename = "batch_norm")]
    BatchNorm {
        scale: Vec<f64>,
        shift: Vec<f64>,
        running_mean: Vec<f64>,
        running_var: Vec<f64>,
        momentum: f64,
        epsilon: f64,
    },
    #[serde(rename = "leaky_relu")]
    LeakyRelu { slope: f64 },
    #[serde(rename = "relu")]
    Relu,
    #[serde(rename = "hard_tanh")]
    HardTanh { lo: f64, hi: f64 },
}

const FORMAT: &str = "MEGO-EXPERT";
const VERSION: u32 = 1;

fn mlp_to_dto(net: &Mlp) -> MlpDto {
    let layers = net
        .layers()
        .iter()
        .map(|layer| match layer {
            Layer::Dense(d) => LayerDto::Dense {
                out: d.out_dim(),
                input: d.in_dim(),
                w: d.w.data().to_vec(),
                b: d.b.clone(),
            },
            Layer::BatchNorm(b) => LayerDto::BatchNorm {
                scale: b.scale.clone(),
                shift: b.shift.clone(),
                running_mean: b.running_mean.clone(),
                running_var: b.running_var.clone(),
                momentum: b.momentum,
                epsilon: b.epsilon,
            },
            Layer::Activation(Activation::LeakyRelu { slope }) => LayerDto::LeakyRelu { slope: *slope },
            Layer::Activation(Activation::Relu) => LayerDto::Relu,
            Layer::Activation(Activation::HardTanh { lo, hi }) => LayerDto::HardTanh { lo: *lo, hi: *hi },
        })
        .collect();
    MlpDto { layers }
}

fn mlp_from_dto(dto: MlpDto, context: &str) -> Result<Mlp> {
    let mut layers = Vec::with_capacity(dto.layers.len());
    for layer in dto.layers {
        layers.push(match layer {
            LayerDto::Dense { out, input, w, b } => {
                if w.len() != out * input || b.len() != out {
                    return Err(Error::parse(context, "dense layer with inconsistent shapes"));
                }
                Layer::Dense(DenseLayer::from_weights(Matrix::from_vec(out, input, w)?, b))
            }
            LayerDto::BatchNorm {
                scale,
                shift,
                running_mean,
                running_var,
                momentum,
                epsilon,
            } => {
                let dim = scale.len();
                if [shift.len(), running_mean.len(), running_var.len()] != [dim, dim, dim] {
                    return Err(Error::parse(context, "batch-norm layer with inconsistent shapes"));
                }
                if running_var.iter().any(|&v| v < 0.0) || epsilon <= 0.0 {
                    return Err(Error::parse(context, "batch-norm stats out of range"));
                }
                let mut bn = BatchNormLayer::new(dim);
                bn.scale = scale;
                bn.shift = shift;
                bn.running_mean = running_mean;
                bn.running_var = running_var;
                bn.momentum = momentum;
                bn.epsilon = epsilon;
                Layer::BatchNorm(bn)
            }
            LayerDto::LeakyRelu { slope } => Layer::Activation(Activation::LeakyRelu { slope }),
            LayerDto::Relu => Layer::Activation(Activation::Relu),
            LayerDto::HardTanh { lo, hi } => Layer::Activation(Activation::hard_tanh(lo, hi)?),
        });
    }
    Mlp::new(layers)
}

pub fn save_expert(model: &ExpertModel, path: impl AsRef<Path>) -> Result<()> {
    let doc = CheckpointFile {
        format: FORMAT.to_string(),
        version: VERSION,
        instance_id: model.instance_id.clone(),
        dim: model.dim,
        latent_dim: model.latent_dim,
        norm: model.norm,
        encoder_trunk: mlp_to_dto(&model.encoder_trunk),
        mu_head: mlp_to_dto(&model.mu_head),
        logvar_head: mlp_to_dto(&model.logvar_head),
        decoder: mlp_to_dto(&model.decoder),
        predictor: mlp_to_dto(&model.predictor),
    };
    textio::atomic_write(path, textio::to_json_string(&doc)?.as_bytes())
}

pub fn load_expert(path: impl AsRef<Path>) -> Result<ExpertModel> {
    let path = path.as_ref();
    let context = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let doc: CheckpointFile = textio::from_json_str(&text, &context)?;
    if doc.format != FORMAT || doc.version != VERSION {
        return Err(Error::parse(
            &context,
            format!("unsupported checkpoint format {} v{}", doc.format, doc.version),
        ));
    }
    if doc.norm.y_min > doc.norm.y_max {
        return Err(Error::parse(&context, "normalization stats with y_min > y_max"));
    }
    Ok(ExpertModel {
        instance_id: doc.instance_id,
        dim: doc.dim,
        latent_dim: doc.latent_dim,
        norm: doc.norm,
        encoder_trunk: mlp_from_dto(doc.encoder_trunk, &context)?,
        mu_head: mlp_from_dto(doc.mu_head, &context)?,
        logvar_head: mlp_from_dto(doc.logvar_head, &context)?,
        decoder: mlp_from_dto(doc.decoder, &context)?,
        predictor: mlp_from_dto(doc.predictor, &context)?,
    })
}
