//! From-scratch binary classifiers: a primal-SGD linear SVM and a
//! one-hidden-layer MLP trained with manual backprop.
//!
//! Label convention: 0 = authentic, 1 = tampered.

mod gradcheck;
mod mlp;
mod model_io;
mod svm;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use gradcheck::{gradient_check, numeric_gradient};
pub use mlp::{mlp_forward, mlp_gradients, mlp_loss, mlp_train, MlpGradients, MlpModel};
pub use model_io::{load_model, read_model, save_model, write_model, SavedModel, FORMAT_MAGIC};
pub use svm::{hinge_loss, svm_gradients, svm_predict, svm_train, LinearSvmModel};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: u8,
}

impl LabeledSample {
    pub fn new(features: Vec<f64>, label: u8) -> Self {
        Self { features, label }
    }

    /// Label mapped to `{-1, +1}`.
    pub fn signed_label(&self) -> f64 {
        2.0 * f64::from(self.label) - 1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub seed: u64,
    pub shuffle: bool,
    /// Hidden units; only used by the MLP trainer.
    pub hidden_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 0.01,
            lambda: 1e-4,
            seed: 0,
            shuffle: true,
            hidden_dim: 64,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParam("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "learning rate {} must be > 0",
                self.learning_rate
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParam(format!("lambda {} must be >= 0", self.lambda)));
        }
        Ok(())
    }
}

/// Either trained classifier.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Svm(LinearSvmModel),
    Mlp(MlpModel),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Svm,
    Mlp,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(ModelKind::Svm),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::InvalidParam(format!("unknown model kind {other:?}"))),
        }
    }
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Svm(_) => ModelKind::Svm,
            Model::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Svm(m) => m.weights.len(),
            Model::Mlp(m) => m.input_dim,
        }
    }

    /// `(label, score)`: the margin for the SVM, the tampered probability for the MLP.
    pub fn predict(&self, x: &[f64]) -> Result<(u8, f64)> {
        match self {
            Model::Svm(m) => svm_predict(m, x),
            Model::Mlp(m) => {
                let p = mlp_forward(m, x)?;
                Ok((u8::from(p >= 0.5), p))
            }
        }
    }

    pub fn train(kind: ModelKind, train: &[LabeledSample], cfg: &TrainConfig) -> Result<Model> {
        Ok(match kind {
            ModelKind::Svm => Model::Svm(svm_train(train, cfg)?),
            ModelKind::Mlp => Model::Mlp(mlp_train(train, cfg)?),
        })
    }
}

/// Checks shared training preconditions and returns the feature dimension.
fn check_training_set(train: &[LabeledSample]) -> Result<usize> {
    let first = train.first().ok_or(Error::EmptyTrainingSet)?;
    let dim = first.features.len();
    for s in train {
        if s.features.len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                actual: s.features.len(),
            });
        }
        if s.label > 1 {
            return Err(Error::InvalidParam(format!("label {} not in {{0, 1}}", s.label)));
        }
    }
    Ok(dim)
}

/// Visiting order for one epoch.
fn epoch_order(order: &mut [usize], shuffle: bool, rng: &mut ChaCha8Rng) {
    if shuffle {
        order.shuffle(rng);
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
