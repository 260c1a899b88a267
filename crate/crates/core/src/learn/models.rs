use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{affine, cross_entropy, softmax_rows, transpose_dot, LearnError};
use crate::rng::Stream;
use crate::vectorize::Features;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Softmax,
    Mlp { hidden: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    /// features × classes
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl SoftmaxModel {
    pub fn zeros(n_features: usize, n_classes: usize) -> Self {
        SoftmaxModel {
            weights: Array2::zeros((n_features, n_classes)),
            bias: Array1::zeros(n_classes),
        }
    }
}

/// `tanh` hidden layer followed by a softmax output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

fn glorot(rows: usize, cols: usize, rng: &mut Stream) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
}

impl MlpModel {
    pub fn init(n_features: usize, hidden: usize, n_classes: usize, rng: &mut Stream) -> Self {
        MlpModel {
            w1: glorot(n_features, hidden, rng),
            b1: Array1::zeros(hidden),
            w2: glorot(hidden, n_classes, rng),
            b2: Array1::zeros(n_classes),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b1.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Softmax(SoftmaxModel),
    Mlp(MlpModel),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    kind: String,
    shapes: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
}

fn flat(a: &[f64]) -> Vec<f64> {
    a.to_vec()
}

impl Model {
    pub fn new(kind: ModelKind, n_features: usize, n_classes: usize, rng: &mut Stream) -> Self {
        match kind {
            ModelKind::Softmax => Model::Softmax(SoftmaxModel::zeros(n_features, n_classes)),
            ModelKind::Mlp { hidden } => Model::Mlp(MlpModel::init(n_features, hidden, n_classes, rng)),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Softmax(_) => ModelKind::Softmax,
            Model::Mlp(m) => ModelKind::Mlp { hidden: m.hidden() },
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Softmax(m) => m.weights.nrows(),
            Model::Mlp(m) => m.w1.nrows(),
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Model::Softmax(m) => m.bias.len(),
            Model::Mlp(m) => m.b2.len(),
        }
    }

    fn check_input(&self, x: &Features) -> Result<(), LearnError> {
        if x.n_cols() != self.n_features() {
            return Err(LearnError::ShapeMismatch(format!(
                "{} input columns, model expects {}",
                x.n_cols(),
                self.n_features()
            )));
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &Features) -> Result<Array2<f64>, LearnError> {
        self.check_input(x)?;
        let mut logits = match self {
            Model::Softmax(m) => affine(x, &m.weights, &m.bias),
            Model::Mlp(m) => {
                let hidden = affine(x, &m.w1, &m.b1).mapv(f64::tanh);
                hidden.dot(&m.w2) + m.b2.view().insert_axis(Axis(0))
            }
        };
        softmax_rows(&mut logits);
        Ok(logits)
    }

    /// Mean cross-entropy over the batch and its gradient, returned as a
    /// model of the same shape.
    pub fn loss_and_grad(&self, x: &Features, y: &Array2<f64>) -> Result<(f64, Model), LearnError> {
        self.check_input(x)?;
        if y.nrows() != x.n_rows() || y.ncols() != self.n_classes() {
            return Err(LearnError::ShapeMismatch(format!(
                "labels {:?} for {} rows and {} classes",
                y.dim(),
                x.n_rows(),
                self.n_classes()
            )));
        }
        let n = x.n_rows().max(1) as f64;
        match self {
            Model::Softmax(m) => {
                let mut probs = affine(x, &m.weights, &m.bias);
                softmax_rows(&mut probs);
                let loss = cross_entropy(&probs, y)?;
                let d_logits = (probs - y) / n;
                let grad = SoftmaxModel {
                    weights: transpose_dot(x, &d_logits),
                    bias: d_logits.sum_axis(Axis(0)),
                };
                Ok((loss, Model::Softmax(grad)))
            }
            Model::Mlp(m) => {
                let hidden = affine(x, &m.w1, &m.b1).mapv(f64::tanh);
                let mut probs = hidden.dot(&m.w2) + m.b2.view().insert_axis(Axis(0));
                softmax_rows(&mut probs);
                let loss = cross_entropy(&probs, y)?;
                let d_logits = (probs - y) / n;
                let w2 = hidden.t().dot(&d_logits);
                let b2 = d_logits.sum_axis(Axis(0));
                let mut d_hidden = d_logits.dot(&m.w2.t());
                d_hidden.zip_mut_with(&hidden, |d, &h| *d *= 1.0 - h * h);
                let w1 = transpose_dot(x, &d_hidden);
                let b1 = d_hidden.sum_axis(Axis(0));
                Ok((loss, Model::Mlp(MlpModel { w1, b1, w2, b2 })))
            }
        }
    }

    /// Parameter tensors as flat row-major slices, in a fixed order.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Model::Softmax(m) => vec![
                m.weights.as_slice_mut().expect("standard layout"),
                m.bias.as_slice_mut().expect("standard layout"),
            ],
            Model::Mlp(m) => vec![
                m.w1.as_slice_mut().expect("standard layout"),
                m.b1.as_slice_mut().expect("standard layout"),
                m.w2.as_slice_mut().expect("standard layout"),
                m.b2.as_slice_mut().expect("standard layout"),
            ],
        }
    }

    pub fn params(&self) -> Vec<&[f64]> {
        match self {
            Model::Softmax(m) => vec![
                m.weights.as_slice().expect("standard layout"),
                m.bias.as_slice().expect("standard layout"),
            ],
            Model::Mlp(m) => vec![
                m.w1.as_slice().expect("standard layout"),
                m.b1.as_slice().expect("standard layout"),
                m.w2.as_slice().expect("standard layout"),
                m.b2.as_slice().expect("standard layout"),
            ],
        }
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.params().iter().map(|p| p.len()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    fn shapes(&self) -> Vec<Vec<usize>> {
        match self {
            Model::Softmax(m) => vec![m.weights.shape().to_vec(), m.bias.shape().to_vec()],
            Model::Mlp(m) => vec![
                m.w1.shape().to_vec(),
                m.b1.shape().to_vec(),
                m.w2.shape().to_vec(),
                m.b2.shape().to_vec(),
            ],
        }
    }

    /// JSON `{kind, shapes, weights}` with each tensor flattened row-major.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LearnError> {
        let file = ModelFile {
            kind: match self {
                Model::Softmax(_) => "softmax".into(),
                Model::Mlp(_) => "mlp".into(),
            },
            shapes: self.shapes(),
            weights: self.params().into_iter().map(flat).collect(),
        };
        serde_json::to_writer(BufWriter::new(File::create(path)?), &file)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LearnError> {
        let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let bad = |m: &str| LearnError::BadModelFile(m.to_string());
        let matrix = |i: usize| -> Result<Array2<f64>, LearnError> {
            let shape = file.shapes.get(i).ok_or_else(|| bad("missing shape"))?;
            let [r, c] = shape[..] else { return Err(bad("expected a matrix shape")) };
            let w = file.weights.get(i).ok_or_else(|| bad("missing weights"))?;
            Array2::from_shape_vec((r, c), w.clone()).map_err(|e| bad(&e.to_string()))
        };
        let vector = |i: usize| -> Result<Array1<f64>, LearnError> {
            let shape = file.shapes.get(i).ok_or_else(|| bad("missing shape"))?;
            let w = file.weights.get(i).ok_or_else(|| bad("missing weights"))?;
            if shape[..] != [w.len()] {
                return Err(bad("vector shape does not match weights"));
            }
            Ok(Array1::from(w.clone()))
        };
        let model = match file.kind.as_str() {
            "softmax" => Model::Softmax(SoftmaxModel { weights: matrix(0)?, bias: vector(1)? }),
            "mlp" => Model::Mlp(MlpModel { w1: matrix(0)?, b1: vector(1)?, w2: matrix(2)?, b2: vector(3)? }),
            other => return Err(bad(&format!("unknown kind {other:?}"))),
        };
        Ok(model)
    }
}
