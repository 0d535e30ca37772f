//! Mini-batch training with Adam and a per-epoch validation curve.

use super::{
    backward_batch, forward_batch, tensorize, Mode, NeuralConfig, NeuralModel, NeuralParams,
};
use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::word::BoundaryVector;

/// Adam with bias correction; one moment pair per parameter tensor.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    m: NeuralParams,
    v: NeuralParams,
}

impl Adam {
    pub fn new(lr: f64, like: &NeuralParams) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: NeuralParams::zeros_like(like),
            v: NeuralParams::zeros_like(like),
        }
    }

    pub fn update(&mut self, params: &mut NeuralParams, grads: &NeuralParams) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let g_views = grads.flat_views();
        let mut p_views = params.flat_views_mut();
        let mut m_views = self.m.flat_views_mut();
        let mut v_views = self.v.flat_views_mut();
        for i in 0..p_views.len() {
            let g = g_views[i].1;
            let p = &mut p_views[i];
            let m = &mut m_views[i];
            let v = &mut v_views[i];
            for j in 0..g.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// Outcome of a training run.
pub struct TrainReport {
    /// Validation word-level error rate after each epoch, in percent.
    pub val_ower_curve: Vec<f64>,
    /// Epoch (1-based) whose parameters were kept.
    pub best_epoch: usize,
    /// Mean training loss of the final epoch.
    pub final_loss: f64,
}

/// Word-level error rate of a model on (word, gold) samples, in percent.
pub fn word_error_rate(model: &NeuralModel, samples: &[(String, BoundaryVector)]) -> Result<f64> {
    let mut wrong = 0usize;
    for (word, gold) in samples {
        let pred = model.predict(word)?;
        if &pred != gold {
            wrong += 1;
        }
    }
    Ok(100.0 * wrong as f64 / samples.len().max(1) as f64)
}

/// Train a tagger on (word, gold boundary) samples for one channel.
///
/// Deterministic for a fixed config seed: initialization, epoch shuffling,
/// and dropout all draw from one SplitMix64 stream. Returns the parameters
/// of the epoch with the lowest validation OWER (earliest on ties), already
/// rounded through f32.
pub fn train_neural(
    train: &[(String, BoundaryVector)],
    val: &[(String, BoundaryVector)],
    cfg: &NeuralConfig,
) -> Result<(NeuralModel, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::EmptyDataset("neural training needs train and val".into()));
    }
    for (word, _) in train {
        let len = word.chars().count();
        if len > cfg.token_len {
            return Err(Error::WordTooLong {
                word: word.clone(),
                len,
                max: cfg.token_len,
            });
        }
    }
    let alphabet = Alphabet::from_words(train.iter().map(|(w, _)| w.as_str()));
    let mut rng = SplitMix64::new(cfg.seed);
    let mut params = NeuralParams::init(cfg, alphabet.len(), &mut rng);
    let mut optimizer = Adam::new(cfg.learning_rate, &params);

    let mut best_params = params.clone();
    let mut best_ower = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut curve = Vec::with_capacity(cfg.epochs_max);
    let mut final_loss = 0.0;

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs_max {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let words: Vec<&str> = chunk.iter().map(|&i| train[i].0.as_str()).collect();
            let golds: Vec<Vec<bool>> = chunk
                .iter()
                .map(|&i| train[i].1.labels().to_vec())
                .collect();
            let tensor = tensorize(&words, &alphabet, cfg)?;
            let (_, cache) = forward_batch(&params, cfg, &tensor, Mode::Train(&mut rng));
            let (loss, grads) = backward_batch(&params, cfg, &tensor, &cache, &golds);
            if !loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite loss in epoch {epoch}"
                )));
            }
            // running statistics follow the batch statistics
            params.bn_run_mean = &params.bn_run_mean * (1.0 - super::BN_MOMENTUM)
                + &(&cache.batch_mean * super::BN_MOMENTUM);
            params.bn_run_var = &params.bn_run_var * (1.0 - super::BN_MOMENTUM)
                + &(&cache.batch_var * super::BN_MOMENTUM);
            optimizer.update(&mut params, &grads);
            epoch_loss += loss;
            batches += 1;
        }
        final_loss = epoch_loss / batches.max(1) as f64;

        let probe = NeuralModel {
            cfg: cfg.clone(),
            alphabet: alphabet.clone(),
            params: params.clone(),
        };
        let ower = word_error_rate(&probe, val)?;
        curve.push(ower);
        if ower < best_ower {
            best_ower = ower;
            best_params = params.clone();
            best_epoch = epoch;
        }
    }

    best_params.quantize_f32();
    Ok((
        NeuralModel {
            cfg: cfg.clone(),
            alphabet,
            params: best_params,
        },
        TrainReport {
            val_ower_curve: curve,
            best_epoch,
            final_loss,
        },
    ))
}
