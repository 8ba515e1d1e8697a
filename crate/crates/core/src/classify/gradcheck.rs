use super::{hinge_loss, mlp_gradients, mlp_loss, svm_gradients, LabeledSample, Model};
use crate::error::{Error, Result};

/// Flattened parameter view used by the finite-difference check.
fn params(model: &Model) -> Vec<f64> {
    match model {
        Model::Svm(m) => m.weights.iter().copied().chain([m.bias]).collect(),
        Model::Mlp(m) => m
            .hidden_weights
            .iter()
            .chain(&m.hidden_bias)
            .chain(&m.output_weights)
            .copied()
            .chain([m.output_bias])
            .collect(),
    }
}

fn set_param(model: &mut Model, i: usize, v: f64) {
    match model {
        Model::Svm(m) => {
            if i < m.weights.len() {
                m.weights[i] = v;
            } else {
                m.bias = v;
            }
        }
        Model::Mlp(m) => {
            let (a, b, c) = (
                m.hidden_weights.len(),
                m.hidden_bias.len(),
                m.output_weights.len(),
            );
            if i < a {
                m.hidden_weights[i] = v;
            } else if i < a + b {
                m.hidden_bias[i - a] = v;
            } else if i < a + b + c {
                m.output_weights[i - a - b] = v;
            } else {
                m.output_bias = v;
            }
        }
    }
}

fn loss(model: &Model, s: &LabeledSample) -> Result<f64> {
    match model {
        Model::Svm(m) => hinge_loss(m, s),
        Model::Mlp(m) => mlp_loss(m, s),
    }
}

fn analytic_gradient(model: &Model, s: &LabeledSample) -> Result<Vec<f64>> {
    Ok(match model {
        Model::Svm(m) => {
            let (gw, gb) = svm_gradients(m, s)?;
            gw.into_iter().chain([gb]).collect()
        }
        Model::Mlp(m) => {
            let (_, g) = mlp_gradients(m, s)?;
            g.hidden_weights
                .into_iter()
                .chain(g.hidden_bias)
                .chain(g.output_weights)
                .chain([g.output_bias])
                .collect()
        }
    })
}

/// Central differences `(f(p + eps) - f(p - eps)) / 2eps` for every parameter.
pub fn numeric_gradient(model: &Model, s: &LabeledSample, eps: f64) -> Result<Vec<f64>> {
    let base = params(model);
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(base.len());
    for (i, &p) in base.iter().enumerate() {
        set_param(&mut probe, i, p + eps);
        let up = loss(&probe, s)?;
        set_param(&mut probe, i, p - eps);
        let down = loss(&probe, s)?;
        set_param(&mut probe, i, p);
        out.push((up - down) / (2.0 * eps));
    }
    Ok(out)
}

/// Maximum relative error between backprop/subgradient and central differences.
///
/// SVM checks refuse points whose margin `y(w.x + b)` is within `eps` (scaled by
/// the largest input magnitude) of the hinge kink.
pub fn gradient_check(model: &Model, s: &LabeledSample, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(Error::InvalidParam(format!("eps {eps} not in (0, 1e-2]")));
    }
    if let Model::Svm(m) = model {
        let margin = s.signed_label() * m.margin(&s.features)?;
        let reach = s.features.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        if (margin - 1.0).abs() <= eps * reach {
            return Err(Error::KinkProximity(margin));
        }
    }
    let analytic = analytic_gradient(model, s)?;
    let numeric = numeric_gradient(model, s, eps)?;
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / (a.abs() + n.abs()).max(1e-12))
        .fold(0.0, f64::max))
}
