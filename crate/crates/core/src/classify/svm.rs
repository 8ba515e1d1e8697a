use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_training_set, dot, epoch_order, LabeledSample, TrainConfig};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// L2 coefficient the model was trained with.
    pub lambda: f64,
}

impl LinearSvmModel {
    pub fn zeros(dim: usize, lambda: f64) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            lambda,
        }
    }

    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimMismatch {
                expected: self.weights.len(),
                actual: x.len(),
            });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }
}

/// `max(0, 1 - y(w.x + b)) + (lambda/2)|w|^2`.
pub fn hinge_loss(model: &LinearSvmModel, s: &LabeledSample) -> Result<f64> {
    let f = model.margin(&s.features)?;
    let reg = 0.5 * model.lambda * dot(&model.weights, &model.weights);
    Ok((1.0 - s.signed_label() * f).max(0.0) + reg)
}

/// Subgradient of [`hinge_loss`] as `(d/dw, d/db)`. At the kink the inactive
/// branch is taken, matching the training update.
pub fn svm_gradients(model: &LinearSvmModel, s: &LabeledSample) -> Result<(Vec<f64>, f64)> {
    let y = s.signed_label();
    let active = y * model.margin(&s.features)? < 1.0;
    let gw = model
        .weights
        .iter()
        .zip(&s.features)
        .map(|(&w, &x)| model.lambda * w - if active { y * x } else { 0.0 })
        .collect();
    let gb = if active { -y } else { 0.0 };
    Ok((gw, gb))
}

/// Primal per-sample SGD on hinge + L2, starting from zero parameters.
pub fn svm_train(train: &[LabeledSample], cfg: &TrainConfig) -> Result<LinearSvmModel> {
    cfg.validate()?;
    let dim = check_training_set(train)?;
    let mut model = LinearSvmModel::zeros(dim, cfg.lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let lr = cfg.learning_rate;

    for _ in 0..cfg.epochs {
        epoch_order(&mut order, cfg.shuffle, &mut rng);
        for &i in &order {
            let s = &train[i];
            let y = s.signed_label();
            let active = y * (dot(&model.weights, &s.features) + model.bias) < 1.0;
            for (w, &x) in model.weights.iter_mut().zip(&s.features) {
                let step = cfg.lambda * *w - if active { y * x } else { 0.0 };
                *w -= lr * step;
            }
            if active {
                model.bias += lr * y;
            }
        }
    }
    Ok(model)
}

/// `(label, margin)` with a zero margin resolved as tampered.
pub fn svm_predict(model: &LinearSvmModel, x: &[f64]) -> Result<(u8, f64)> {
    let m = model.margin(x)?;
    Ok((u8::from(m >= 0.0), m))
}
