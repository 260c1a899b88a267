//! Softmax regression and a one-hidden-layer MLP, trained with ADADELTA on
//! categorical cross-entropy.

mod adadelta;
mod models;
mod train;

use ndarray::{Array1, Array2, Axis};
use thiserror::Error;

use crate::vectorize::{argmax, CsrMatrix, FeatureMatrix, Features};

pub use adadelta::{adadelta_step, AdadeltaState};
pub use models::{MlpModel, Model, ModelKind, SoftmaxModel};
pub use train::{train, EpochStats, TrainConfig, TrainLog};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("loss diverged at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("malformed model file: {0}")]
    BadModelFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Probabilities clamped to this floor before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Row-wise softmax in place, subtracting each row's max first.
pub fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// `x · w + b` for sparse or dense `x`.
pub(crate) fn affine(x: &Features, w: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut out = match x {
        Features::Dense(m) => m.dot(w),
        Features::Sparse(m) => sparse_dot(m, w),
    };
    out += &b.view().insert_axis(Axis(0));
    out
}

fn sparse_dot(x: &CsrMatrix, w: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((x.n_rows(), w.ncols()));
    for r in 0..x.n_rows() {
        let (idx, val) = x.row(r);
        let mut row = out.row_mut(r);
        for (&c, &v) in idx.iter().zip(val) {
            row.scaled_add(v, &w.row(c));
        }
    }
    out
}

/// `xᵀ · d` for sparse or dense `x`.
pub(crate) fn transpose_dot(x: &Features, d: &Array2<f64>) -> Array2<f64> {
    match x {
        Features::Dense(m) => m.t().dot(d),
        Features::Sparse(m) => {
            let mut out = Array2::zeros((m.n_cols, d.ncols()));
            for r in 0..m.n_rows() {
                let (idx, val) = m.row(r);
                let drow = d.row(r);
                for (&c, &v) in idx.iter().zip(val) {
                    out.row_mut(c).scaled_add(v, &drow);
                }
            }
            out
        }
    }
}

/// Class probabilities of a softmax regression model.
pub fn softmax_forward(model: &SoftmaxModel, x: &Features) -> Result<Array2<f64>, LearnError> {
    if x.n_cols() != model.weights.nrows() {
        return Err(LearnError::ShapeMismatch(format!(
            "{} input columns, model expects {}",
            x.n_cols(),
            model.weights.nrows()
        )));
    }
    let mut logits = affine(x, &model.weights, &model.bias);
    softmax_rows(&mut logits);
    Ok(logits)
}

/// `-mean_rows Σ_c y_c ln p_c`, with `p` clamped to `[1e-12, 1]`.
pub fn cross_entropy(probs: &Array2<f64>, targets: &Array2<f64>) -> Result<f64, LearnError> {
    if probs.dim() != targets.dim() {
        return Err(LearnError::ShapeMismatch(format!(
            "probabilities {:?} vs targets {:?}",
            probs.dim(),
            targets.dim()
        )));
    }
    if probs.nrows() == 0 {
        return Ok(0.0);
    }
    let total: f64 = probs
        .iter()
        .zip(targets.iter())
        .map(|(&p, &y)| if y == 0.0 { 0.0 } else { y * p.clamp(PROB_FLOOR, 1.0).ln() })
        .sum();
    Ok(-total / probs.nrows() as f64)
}

/// `1 - accuracy`, predictions taken as the argmax with ties to the lowest
/// class index.
pub fn error_from_probs(probs: &Array2<f64>, targets: &Array2<f64>) -> f64 {
    let n = probs.nrows();
    if n == 0 {
        return 0.0;
    }
    let correct = probs
        .rows()
        .into_iter()
        .zip(targets.rows())
        .filter(|(p, y)| argmax(p.view()) == argmax(y.view()))
        .count();
    1.0 - correct as f64 / n as f64
}

pub fn error_rate(model: &Model, data: &FeatureMatrix) -> Result<f64, LearnError> {
    let probs = model.predict_proba(&data.features)?;
    Ok(error_from_probs(&probs, &data.labels))
}
