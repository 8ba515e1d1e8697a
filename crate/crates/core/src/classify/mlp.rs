use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_training_set, dot, epoch_order, LabeledSample, TrainConfig};
use crate::error::{Error, Result};

/// One hidden relu layer, sigmoid output.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Row-major `hidden_dim x input_dim`.
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl MlpModel {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            hidden_weights: vec![0.0; hidden_dim * input_dim],
            hidden_bias: vec![0.0; hidden_dim],
            output_weights: vec![0.0; hidden_dim],
            output_bias: 0.0,
        }
    }

    /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut m = Self::zeros(input_dim, hidden_dim);
        let a = 1.0 / (input_dim.max(1) as f64).sqrt();
        for w in &mut m.hidden_weights {
            *w = rng.random_range(-a..a);
        }
        let a = 1.0 / (hidden_dim.max(1) as f64).sqrt();
        for w in &mut m.output_weights {
            *w = rng.random_range(-a..a);
        }
        m
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Hidden activations and output logit.
    fn logit(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let hidden: Vec<f64> = (0..self.hidden_dim)
            .map(|j| {
                let row = &self.hidden_weights[j * self.input_dim..(j + 1) * self.input_dim];
                (dot(row, x) + self.hidden_bias[j]).max(0.0)
            })
            .collect();
        let z = dot(&self.output_weights, &hidden) + self.output_bias;
        (hidden, z)
    }
}

// Largest double below 1; keeps probabilities strictly inside (0, 1).
const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;

fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, ONE_MINUS)
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Tampered probability `sigmoid(w2 . relu(W1 x + b1) + b2)`.
pub fn mlp_forward(model: &MlpModel, x: &[f64]) -> Result<f64> {
    model.check_input(x)?;
    Ok(sigmoid(model.logit(x).1))
}

/// Binary cross-entropy of one sample, computed from the logit.
pub fn mlp_loss(model: &MlpModel, s: &LabeledSample) -> Result<f64> {
    model.check_input(&s.features)?;
    let z = model.logit(&s.features).1;
    Ok(softplus(z) - f64::from(s.label) * z)
}

/// Gradients of [`mlp_loss`] with the same layout as [`MlpModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGradients {
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

/// Backprop for one sample; returns the loss alongside the gradients.
pub fn mlp_gradients(model: &MlpModel, s: &LabeledSample) -> Result<(f64, MlpGradients)> {
    model.check_input(&s.features)?;
    let x = &s.features;
    let (hidden, z) = model.logit(x);
    let y = f64::from(s.label);
    let loss = softplus(z) - y * z;
    // dL/dz for sigmoid + BCE, from the unclamped sigmoid
    let dz = 1.0 / (1.0 + (-z).exp()) - y;

    let output_weights: Vec<f64> = hidden.iter().map(|h| dz * h).collect();
    let hidden_bias: Vec<f64> = hidden
        .iter()
        .zip(&model.output_weights)
        .map(|(&h, &w)| if h > 0.0 { dz * w } else { 0.0 })
        .collect();
    let mut hidden_weights = vec![0.0; model.hidden_dim * model.input_dim];
    for (j, &dh) in hidden_bias.iter().enumerate() {
        if dh != 0.0 {
            let row = &mut hidden_weights[j * model.input_dim..(j + 1) * model.input_dim];
            for (g, &xi) in row.iter_mut().zip(x) {
                *g = dh * xi;
            }
        }
    }
    Ok((
        loss,
        MlpGradients {
            hidden_weights,
            hidden_bias,
            output_weights,
            output_bias: dz,
        },
    ))
}

/// Per-sample SGD on binary cross-entropy; `lambda` adds L2 decay on the weights.
pub fn mlp_train(train: &[LabeledSample], cfg: &TrainConfig) -> Result<MlpModel> {
    cfg.validate()?;
    if cfg.hidden_dim == 0 {
        return Err(Error::InvalidParam("hidden_dim must be >= 1".into()));
    }
    let dim = check_training_set(train)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = MlpModel::init(dim, cfg.hidden_dim, &mut rng);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let lr = cfg.learning_rate;
    let decay = 1.0 - lr * cfg.lambda;

    for _ in 0..cfg.epochs {
        epoch_order(&mut order, cfg.shuffle, &mut rng);
        for &i in &order {
            let (_, g) = mlp_gradients(&model, &train[i])?;
            if cfg.lambda > 0.0 {
                model.hidden_weights.iter_mut().for_each(|w| *w *= decay);
                model.output_weights.iter_mut().for_each(|w| *w *= decay);
            }
            for (w, d) in model.hidden_weights.iter_mut().zip(&g.hidden_weights) {
                *w -= lr * d;
            }
            for (b, d) in model.hidden_bias.iter_mut().zip(&g.hidden_bias) {
                *b -= lr * d;
            }
            for (w, d) in model.output_weights.iter_mut().zip(&g.output_weights) {
                *w -= lr * d;
            }
            model.output_bias -= lr * g.output_bias;
        }
    }
    Ok(model)
}
