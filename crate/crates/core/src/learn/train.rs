use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{adadelta_step, cross_entropy, error_from_probs, AdadeltaState, LearnError, Model, ModelKind};
use crate::rng;
use crate::vectorize::{mixup_with_rng, FeatureMatrix, MixupConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub epochs: usize,
    /// Mini-batch size; `None` trains full-batch.
    pub batch_size: Option<usize>,
    /// On-the-fly mixup of every training batch.
    pub mixup: Option<MixupConfig>,
    pub seed: u64,
    pub rho: f64,
    pub epsilon: f64,
}

impl TrainConfig {
    pub const DEFAULT_BATCH: usize = 128;

    pub fn new(kind: ModelKind, epochs: usize, seed: u64) -> Self {
        TrainConfig {
            kind,
            epochs,
            batch_size: Some(Self::DEFAULT_BATCH),
            mixup: None,
            seed,
            rho: AdadeltaState::DEFAULT_RHO,
            epsilon: AdadeltaState::DEFAULT_EPSILON,
        }
    }

    pub fn with_mixup(mut self, mixup: Option<MixupConfig>) -> Self {
        self.mixup = mixup;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean batch loss seen by the optimizer (against mixed labels when
    /// mixup is on).
    pub train_loss: f64,
    pub train_error: f64,
    pub val_loss: f64,
    pub val_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

impl TrainLog {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }

    pub fn best_val_error(&self) -> Option<f64> {
        self.epochs.iter().map(|e| e.val_error).min_by(f64::total_cmp)
    }

    pub fn min_val_loss(&self) -> Option<f64> {
        self.epochs.iter().map(|e| e.val_loss).min_by(f64::total_cmp)
    }

    /// Rise of the validation loss from its minimum to the final epoch.
    pub fn val_loss_rise(&self) -> Option<f64> {
        Some(self.last()?.val_loss - self.min_val_loss()?)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), LearnError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "train_loss", "train_error", "val_loss", "val_error"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.train_error.to_string(),
                e.val_loss.to_string(),
                e.val_error.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, LearnError> {
        let mut r = csv::Reader::from_path(path)?;
        let mut epochs = Vec::new();
        for row in r.deserialize() {
            epochs.push(row?);
        }
        Ok(TrainLog { epochs })
    }
}

fn evaluate(model: &Model, data: &FeatureMatrix) -> Result<(f64, f64), LearnError> {
    if data.n_rows() == 0 {
        return Ok((0.0, 0.0));
    }
    let probs = model.predict_proba(&data.features)?;
    Ok((cross_entropy(&probs, &data.labels)?, error_from_probs(&probs, &data.labels)))
}

/// Trains with ADADELTA on shuffled mini-batches and logs loss and error on
/// both sets after every epoch. Deterministic for a fixed seed.
pub fn train(cfg: &TrainConfig, train_set: &FeatureMatrix, val_set: &FeatureMatrix) -> Result<(Model, TrainLog), LearnError> {
    if cfg.epochs == 0 {
        return Err(LearnError::InvalidConfig("epochs must be at least 1".into()));
    }
    if cfg.batch_size == Some(0) {
        return Err(LearnError::InvalidConfig("batch size must be positive".into()));
    }
    if train_set.n_rows() == 0 {
        return Err(LearnError::InvalidConfig("empty training set".into()));
    }
    let n_features = train_set.features.n_cols();
    let n_classes = train_set.n_classes();
    if val_set.n_rows() > 0 && (val_set.features.n_cols() != n_features || val_set.n_classes() != n_classes) {
        return Err(LearnError::ShapeMismatch("training and validation shapes differ".into()));
    }

    let mut init_rng = rng::labeled_stream(cfg.seed, "init");
    let mut order_rng = rng::labeled_stream(cfg.seed, "batches");
    let mut mix_rng = rng::labeled_stream(cfg.seed, "mixup");
    let mut model = Model::new(cfg.kind, n_features, n_classes, &mut init_rng);
    let mut state = AdadeltaState::new(&model.param_sizes(), cfg.rho, cfg.epsilon);

    let n = train_set.n_rows();
    let batch = cfg.batch_size.unwrap_or(n).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = TrainLog::default();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch) {
            let mut mb = train_set.select_rows(chunk);
            if let Some(mix) = &cfg.mixup {
                if mb.n_rows() >= 2 {
                    mb = mixup_with_rng(&mb, mix.alpha, mix.same_class_only, &mut mix_rng)
                        .map_err(|e| LearnError::InvalidConfig(e.to_string()))?;
                }
            }
            let (loss, grad) = model.loss_and_grad(&mb.features, &mb.labels)?;
            if !loss.is_finite() {
                return Err(LearnError::DivergedLoss { epoch });
            }
            loss_sum += loss * chunk.len() as f64;
            let grads = grad.params();
            adadelta_step(&mut state, &mut model.params_mut(), &grads)?;
        }
        let (_, train_error) = evaluate(&model, train_set)?;
        let (val_loss, val_error) = evaluate(&model, val_set)?;
        let train_loss = loss_sum / n as f64;
        if !train_loss.is_finite() || !val_loss.is_finite() || !model.is_finite() {
            return Err(LearnError::DivergedLoss { epoch });
        }
        log.epochs.push(EpochStats { epoch, train_loss, train_error, val_loss, val_error });
    }
    Ok((model, log))
}
