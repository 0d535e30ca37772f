//! Window-CNN -> BiLSTM x2 -> CRF sequence tagger for one input channel,
//! with from-scratch forward, loss, gradients, and training.
//!
//! Per letter, a 5-character window is embedded, convolved (same padding),
//! batch-normalized, dropped out, max-pooled (same padding), and flattened;
//! the per-letter vectors then run through two BiLSTM layers into a linear
//! CRF head. At the paper defaults the intermediates are
//! `[64 x 34 x 5 x 128]`, `[64 x 34 x 200]`, and `[64 x 34 x 256]`.
//!
//! Everything computes in f64; trained parameters are rounded through f32
//! before being returned so the f32 model file format is lossless.

pub mod layers;
mod train;

pub use train::{train_neural, Adam, TrainReport};

use crate::alphabet::Alphabet;
use crate::crf::chain;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::word::BoundaryVector;
use layers::{bilstm_backward, bilstm_forward, BiLstmCache, BiLstmParams};
use ndarray::{Array1, Array2, Array3, Array4, Axis};
use serde::{Deserialize, Serialize};

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralConfig {
    pub token_len: usize,
    pub window: usize,
    pub embed_dim: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub dropout_p: f64,
    pub pool_kernel: usize,
    pub lstm_units: usize,
    pub batch_size: usize,
    pub epochs_max: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for NeuralConfig {
    /// Paper defaults: token length 34, 5-char windows, 128-dim embeddings,
    /// 40 conv filters of kernel 3, dropout 0.3, pool kernel 3, 128 LSTM
    /// units per direction, batch 64, at most 180 epochs.
    fn default() -> Self {
        Self {
            token_len: 34,
            window: 5,
            embed_dim: 128,
            conv_filters: 40,
            conv_kernel: 3,
            dropout_p: 0.3,
            pool_kernel: 3,
            lstm_units: 128,
            batch_size: 64,
            epochs_max: 180,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl NeuralConfig {
    /// A small configuration for tests and desk-scale experiments.
    pub fn small(seed: u64) -> Self {
        Self {
            token_len: 16,
            window: 5,
            embed_dim: 12,
            conv_filters: 12,
            conv_kernel: 3,
            dropout_p: 0.1,
            pool_kernel: 3,
            lstm_units: 16,
            batch_size: 32,
            epochs_max: 14,
            learning_rate: 0.01,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.token_len,
            self.window,
            self.embed_dim,
            self.conv_filters,
            self.conv_kernel,
            self.pool_kernel,
            self.lstm_units,
            self.batch_size,
            self.epochs_max.max(1),
        ];
        if positive.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig("all dimensions must be positive".into()));
        }
        if self.window % 2 == 0 {
            return Err(Error::InvalidConfig("window must be odd".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidConfig("dropout_p must be in [0,1)".into()));
        }
        Ok(())
    }

    /// Flattened per-position width: window positions times conv filters.
    pub fn flat_width(&self) -> usize {
        self.window * self.conv_filters
    }
}

/// All trainable parameters plus the batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralParams {
    pub embedding: Array2<f64>,
    /// [filters x kernel x embed_dim]
    pub conv_w: Array3<f64>,
    pub conv_b: Array1<f64>,
    pub bn_gamma: Array1<f64>,
    pub bn_beta: Array1<f64>,
    pub bn_run_mean: Array1<f64>,
    pub bn_run_var: Array1<f64>,
    pub lstm1: BiLstmParams,
    pub lstm2: BiLstmParams,
    /// [2 x 2*lstm_units]
    pub emit_w: Array2<f64>,
    pub emit_b: Array1<f64>,
    /// [2 x 2]
    pub trans: Array2<f64>,
}

impl NeuralParams {
    pub fn zeros(cfg: &NeuralConfig, alphabet_size: usize) -> Self {
        let h = cfg.lstm_units;
        Self {
            embedding: Array2::zeros((alphabet_size, cfg.embed_dim)),
            conv_w: Array3::zeros((cfg.conv_filters, cfg.conv_kernel, cfg.embed_dim)),
            conv_b: Array1::zeros(cfg.conv_filters),
            bn_gamma: Array1::ones(cfg.conv_filters),
            bn_beta: Array1::zeros(cfg.conv_filters),
            bn_run_mean: Array1::zeros(cfg.conv_filters),
            bn_run_var: Array1::ones(cfg.conv_filters),
            lstm1: BiLstmParams::zeros(cfg.flat_width(), h),
            lstm2: BiLstmParams::zeros(2 * h, h),
            emit_w: Array2::zeros((2, 2 * h)),
            emit_b: Array1::zeros(2),
            trans: Array2::zeros((2, 2)),
        }
    }

    /// Gradient container: like `zeros` but without the BN buffer init.
    pub fn zeros_like(other: &Self) -> Self {
        let mut z = other.clone();
        for view in z.flat_views_mut() {
            for v in view {
                *v = 0.0;
            }
        }
        z.bn_run_mean.fill(0.0);
        z.bn_run_var.fill(0.0);
        z
    }

    /// Seeded init: uniform scaled by fan-in, forget-gate bias 1, BN gamma 1.
    pub fn init(cfg: &NeuralConfig, alphabet_size: usize, rng: &mut SplitMix64) -> Self {
        let mut p = Self::zeros(cfg, alphabet_size);
        let h = cfg.lstm_units;
        fill_uniform(&mut p.embedding, rng, cfg.embed_dim);
        fill_uniform3(&mut p.conv_w, rng, cfg.conv_kernel * cfg.embed_dim);
        for layer in [&mut p.lstm1, &mut p.lstm2] {
            for dir in [&mut layer.fwd, &mut layer.bwd] {
                let d_in = dir.wx.ncols();
                fill_uniform(&mut dir.wx, rng, d_in);
                fill_uniform(&mut dir.wh, rng, h);
                for u in h..2 * h {
                    dir.b[u] = 1.0; // forget-gate bias
                }
            }
        }
        fill_uniform(&mut p.emit_w, rng, 2 * h);
        p
    }

    /// Trainable tensors in serialization order. BN running stats are
    /// buffers, not parameters, and are listed separately.
    pub fn flat_views_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.embedding.as_slice_mut().unwrap(),
            self.conv_w.as_slice_mut().unwrap(),
            self.conv_b.as_slice_mut().unwrap(),
            self.bn_gamma.as_slice_mut().unwrap(),
            self.bn_beta.as_slice_mut().unwrap(),
            self.lstm1.fwd.wx.as_slice_mut().unwrap(),
            self.lstm1.fwd.wh.as_slice_mut().unwrap(),
            self.lstm1.fwd.b.as_slice_mut().unwrap(),
            self.lstm1.bwd.wx.as_slice_mut().unwrap(),
            self.lstm1.bwd.wh.as_slice_mut().unwrap(),
            self.lstm1.bwd.b.as_slice_mut().unwrap(),
            self.lstm2.fwd.wx.as_slice_mut().unwrap(),
            self.lstm2.fwd.wh.as_slice_mut().unwrap(),
            self.lstm2.fwd.b.as_slice_mut().unwrap(),
            self.lstm2.bwd.wx.as_slice_mut().unwrap(),
            self.lstm2.bwd.wh.as_slice_mut().unwrap(),
            self.lstm2.bwd.b.as_slice_mut().unwrap(),
            self.emit_w.as_slice_mut().unwrap(),
            self.emit_b.as_slice_mut().unwrap(),
            self.trans.as_slice_mut().unwrap(),
        ]
    }

    pub fn flat_views(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("embedding", self.embedding.as_slice().unwrap()),
            ("conv_w", self.conv_w.as_slice().unwrap()),
            ("conv_b", self.conv_b.as_slice().unwrap()),
            ("bn_gamma", self.bn_gamma.as_slice().unwrap()),
            ("bn_beta", self.bn_beta.as_slice().unwrap()),
            ("lstm1_fwd_wx", self.lstm1.fwd.wx.as_slice().unwrap()),
            ("lstm1_fwd_wh", self.lstm1.fwd.wh.as_slice().unwrap()),
            ("lstm1_fwd_b", self.lstm1.fwd.b.as_slice().unwrap()),
            ("lstm1_bwd_wx", self.lstm1.bwd.wx.as_slice().unwrap()),
            ("lstm1_bwd_wh", self.lstm1.bwd.wh.as_slice().unwrap()),
            ("lstm1_bwd_b", self.lstm1.bwd.b.as_slice().unwrap()),
            ("lstm2_fwd_wx", self.lstm2.fwd.wx.as_slice().unwrap()),
            ("lstm2_fwd_wh", self.lstm2.fwd.wh.as_slice().unwrap()),
            ("lstm2_fwd_b", self.lstm2.fwd.b.as_slice().unwrap()),
            ("lstm2_bwd_wx", self.lstm2.bwd.wx.as_slice().unwrap()),
            ("lstm2_bwd_wh", self.lstm2.bwd.wh.as_slice().unwrap()),
            ("lstm2_bwd_b", self.lstm2.bwd.b.as_slice().unwrap()),
            ("emit_w", self.emit_w.as_slice().unwrap()),
            ("emit_b", self.emit_b.as_slice().unwrap()),
            ("trans", self.trans.as_slice().unwrap()),
        ]
    }

    pub fn trans_matrix(&self) -> [[f64; 2]; 2] {
        [
            [self.trans[(0, 0)], self.trans[(0, 1)]],
            [self.trans[(1, 0)], self.trans[(1, 1)]],
        ]
    }

    /// Round all parameters and buffers through f32 (see module docs).
    pub fn quantize_f32(&mut self) {
        for view in self.flat_views_mut() {
            for v in view {
                *v = *v as f32 as f64;
            }
        }
        for v in self
            .bn_run_mean
            .iter_mut()
            .chain(self.bn_run_var.iter_mut())
        {
            *v = *v as f32 as f64;
        }
    }
}

fn fill_uniform(a: &mut Array2<f64>, rng: &mut SplitMix64, fan_in: usize) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for v in a.iter_mut() {
        *v = rng.next_range(-bound, bound);
    }
}

fn fill_uniform3(a: &mut Array3<f64>, rng: &mut SplitMix64, fan_in: usize) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for v in a.iter_mut() {
        *v = rng.next_range(-bound, bound);
    }
}

/// Batched window ids: `[token_len x window]` per word plus real lengths.
/// Window positions beyond the word edges hold the PAD id, as do whole rows
/// past the word length (post-padding).
#[derive(Debug, Clone)]
pub struct WindowTensor {
    pub ids: Vec<Array2<usize>>,
    pub lens: Vec<usize>,
    pub token_len: usize,
    pub window: usize,
}

impl WindowTensor {
    pub fn batch_size(&self) -> usize {
        self.ids.len()
    }

    /// (batch, token, window) dimensions.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.ids.len(), self.token_len, self.window)
    }

    pub fn mask(&self, b: usize, t: usize) -> bool {
        t < self.lens[b]
    }
}

/// Build the window tensor for a batch of words.
pub fn tensorize(words: &[&str], alphabet: &Alphabet, cfg: &NeuralConfig) -> Result<WindowTensor> {
    let half = cfg.window as isize / 2;
    let mut ids = Vec::with_capacity(words.len());
    let mut lens = Vec::with_capacity(words.len());
    for word in words {
        let letters: Vec<char> = word.chars().collect();
        if letters.len() > cfg.token_len {
            return Err(Error::WordTooLong {
                word: (*word).to_string(),
                len: letters.len(),
                max: cfg.token_len,
            });
        }
        let mut grid = Array2::from_elem((cfg.token_len, cfg.window), Alphabet::PAD);
        for t in 0..letters.len() {
            for k in 0..cfg.window {
                let src = t as isize + k as isize - half;
                if src >= 0 && (src as usize) < letters.len() {
                    grid[(t, k)] = alphabet.lookup(letters[src as usize]);
                }
            }
        }
        ids.push(grid);
        lens.push(letters.len());
    }
    Ok(WindowTensor {
        ids,
        lens,
        token_len: cfg.token_len,
        window: cfg.window,
    })
}

/// Forward mode: evaluation is deterministic; training draws dropout masks
/// from the supplied generator and normalizes with batch statistics.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut SplitMix64),
}

/// Per-word activations kept for the backward pass.
pub struct WordCache {
    pub len: usize,
    embedded: Array3<f64>,
    conv: Array3<f64>,
    bn_xhat: Array3<f64>,
    drop_factor: Array3<f64>,
    drop_out: Array3<f64>,
    pool_arg: Array3<usize>,
    flat: Array2<f64>,
    lstm1_cache: BiLstmCache,
    lstm1_out: Array2<f64>,
    lstm2_cache: BiLstmCache,
    pub lstm2_out: Array2<f64>,
    pub emit: Vec<[f64; 2]>,
}

/// Batch-level activations.
pub struct BatchCache {
    pub words: Vec<WordCache>,
    pub batch_mean: Array1<f64>,
    pub batch_var: Array1<f64>,
    bn_count: usize,
    trained: bool,
}

impl BatchCache {
    /// Zero-padded copies of the three paper-shaped intermediates:
    /// embedded `[B x T x W x E]`, flattened `[B x T x W*F]`, and the
    /// second BiLSTM output `[B x T x 2H]`.
    pub fn assemble_trace(
        &self,
        tensor: &WindowTensor,
        cfg: &NeuralConfig,
    ) -> (Array4<f64>, Array3<f64>, Array3<f64>) {
        let b = tensor.batch_size();
        let t_len = cfg.token_len;
        let mut embedded = Array4::zeros((b, t_len, cfg.window, cfg.embed_dim));
        let mut flat = Array3::zeros((b, t_len, cfg.flat_width()));
        let mut feats = Array3::zeros((b, t_len, 2 * cfg.lstm_units));
        for (bi, w) in self.words.iter().enumerate() {
            for t in 0..w.len {
                for k in 0..cfg.window {
                    for e in 0..cfg.embed_dim {
                        embedded[(bi, t, k, e)] = w.embedded[(t, k, e)];
                    }
                }
                for x in 0..cfg.flat_width() {
                    flat[(bi, t, x)] = w.flat[(t, x)];
                }
                for u in 0..2 * cfg.lstm_units {
                    feats[(bi, t, u)] = w.lstm2_out[(t, u)];
                }
            }
        }
        (embedded, flat, feats)
    }
}

/// Run the full pipeline over a batch. Returns per-word per-position class
/// scores and the cache of intermediates.
pub fn forward_batch(
    params: &NeuralParams,
    cfg: &NeuralConfig,
    tensor: &WindowTensor,
    mode: Mode,
) -> (Vec<Vec<[f64; 2]>>, BatchCache) {
    let f_dim = cfg.conv_filters;
    let pad = (cfg.conv_kernel - 1) / 2;

    // embedding + convolution per word
    let mut embedded_all = Vec::with_capacity(tensor.batch_size());
    let mut conv_all = Vec::with_capacity(tensor.batch_size());
    for (ids, &len) in tensor.ids.iter().zip(&tensor.lens) {
        let mut embedded = Array3::zeros((len, cfg.window, cfg.embed_dim));
        let mut conv = Array3::zeros((len, cfg.window, f_dim));
        for t in 0..len {
            for k in 0..cfg.window {
                embedded
                    .index_axis_mut(Axis(0), t)
                    .row_mut(k)
                    .assign(&params.embedding.row(ids[(t, k)]));
            }
            for k in 0..cfg.window {
                let mut acc = params.conv_b.clone();
                for j in 0..cfg.conv_kernel {
                    let src = k as isize + j as isize - pad as isize;
                    if src >= 0 && (src as usize) < cfg.window {
                        let x = embedded.index_axis(Axis(0), t);
                        let wj = params.conv_w.index_axis(Axis(1), j);
                        acc += &wj.dot(&x.row(src as usize));
                    }
                }
                conv.index_axis_mut(Axis(0), t).row_mut(k).assign(&acc);
            }
        }
        embedded_all.push(embedded);
        conv_all.push(conv);
    }

    // normalization statistics
    let mut rng_opt = match mode {
        Mode::Eval => None,
        Mode::Train(rng) => Some(rng),
    };
    let trained = rng_opt.is_some();
    let (mean, var, count) = if trained {
        let mut mean = Array1::zeros(f_dim);
        let mut count = 0usize;
        for conv in &conv_all {
            for v in conv.axis_iter(Axis(0)) {
                for row in v.axis_iter(Axis(0)) {
                    mean += &row;
                    count += 1;
                }
            }
        }
        let denom = (count.max(1)) as f64;
        mean /= denom;
        let mut var = Array1::zeros(f_dim);
        for conv in &conv_all {
            for v in conv.axis_iter(Axis(0)) {
                for row in v.axis_iter(Axis(0)) {
                    let diff = &row - &mean;
                    var += &(&diff * &diff);
                }
            }
        }
        var /= denom;
        (mean, var, count)
    } else {
        (params.bn_run_mean.clone(), params.bn_run_var.clone(), 0)
    };
    let std: Array1<f64> = var.mapv(|v| (v + BN_EPS).sqrt());

    // rest of the pipeline per word
    let mut words = Vec::with_capacity(tensor.batch_size());
    let mut scores = Vec::with_capacity(tensor.batch_size());
    for (wi, conv) in conv_all.into_iter().enumerate() {
        let len = tensor.lens[wi];
        let mut bn_xhat = Array3::zeros((len, cfg.window, f_dim));
        let mut drop_factor = Array3::from_elem((len, cfg.window, f_dim), 1.0);
        let mut drop_out = Array3::zeros((len, cfg.window, f_dim));
        let keep_scale = 1.0 / (1.0 - cfg.dropout_p);
        for t in 0..len {
            for k in 0..cfg.window {
                for f in 0..f_dim {
                    let xhat = (conv[(t, k, f)] - mean[f]) / std[f];
                    bn_xhat[(t, k, f)] = xhat;
                    let y = params.bn_gamma[f] * xhat + params.bn_beta[f];
                    let factor = match rng_opt.as_deref_mut() {
                        Some(rng) => {
                            if rng.next_f64() < cfg.dropout_p {
                                0.0
                            } else {
                                keep_scale
                            }
                        }
                        None => 1.0,
                    };
                    drop_factor[(t, k, f)] = factor;
                    drop_out[(t, k, f)] = y * factor;
                }
            }
        }

        // max pooling with same padding over the window axis
        let half_pool = (cfg.pool_kernel - 1) / 2;
        let mut pool_out = Array3::zeros((len, cfg.window, f_dim));
        let mut pool_arg = Array3::zeros((len, cfg.window, f_dim));
        for t in 0..len {
            for k in 0..cfg.window {
                let lo = k.saturating_sub(half_pool);
                let hi = (k + half_pool).min(cfg.window - 1);
                for f in 0..f_dim {
                    let mut best = f64::NEG_INFINITY;
                    let mut arg = lo;
                    for src in lo..=hi {
                        let v = drop_out[(t, src, f)];
                        if v > best {
                            best = v;
                            arg = src;
                        }
                    }
                    pool_out[(t, k, f)] = best;
                    pool_arg[(t, k, f)] = arg;
                }
            }
        }

        let flat = pool_out
            .to_shape((len, cfg.flat_width()))
            .expect("contiguous")
            .to_owned();
        let (lstm1_out, lstm1_cache) = bilstm_forward(&params.lstm1, &flat);
        let (lstm2_out, lstm2_cache) = bilstm_forward(&params.lstm2, &lstm1_out);
        let emit: Vec<[f64; 2]> = (0..len)
            .map(|t| {
                let h = lstm2_out.row(t);
                [
                    params.emit_w.row(0).dot(&h) + params.emit_b[0],
                    params.emit_w.row(1).dot(&h) + params.emit_b[1],
                ]
            })
            .collect();
        scores.push(emit.clone());
        words.push(WordCache {
            len,
            embedded: embedded_all[wi].clone(),
            conv,
            bn_xhat,
            drop_factor,
            drop_out,
            pool_arg,
            flat,
            lstm1_cache,
            lstm1_out,
            lstm2_cache,
            lstm2_out,
            emit,
        });
    }

    (
        scores,
        BatchCache {
            words,
            batch_mean: mean,
            batch_var: var,
            bn_count: count,
            trained,
        },
    )
}

/// Mean negative log-likelihood of the gold labelings under the CRF head,
/// restricted to real positions.
pub fn crf_loss(scores: &[Vec<[f64; 2]>], trans: &[[f64; 2]; 2], golds: &[Vec<bool>]) -> f64 {
    assert_eq!(scores.len(), golds.len());
    let mut total = 0.0;
    for (emit, gold) in scores.iter().zip(golds) {
        total += chain::sequence_nll(emit, trans, gold);
    }
    total / scores.len().max(1) as f64
}

/// Loss plus exact analytic gradients for every parameter.
pub fn backward_batch(
    params: &NeuralParams,
    cfg: &NeuralConfig,
    tensor: &WindowTensor,
    cache: &BatchCache,
    golds: &[Vec<bool>],
) -> (f64, NeuralParams) {
    assert!(cache.trained, "backward needs a train-mode forward cache");
    let batch = cache.words.len() as f64;
    let f_dim = cfg.conv_filters;
    let trans = params.trans_matrix();
    let mut grads = NeuralParams::zeros_like(params);
    let mut loss_sum = 0.0;

    // phase 1: loss -> d(bn output), per word
    let mut d_bn_out_all: Vec<Array3<f64>> = Vec::with_capacity(cache.words.len());
    for (w, gold) in cache.words.iter().zip(golds) {
        let (node, edge, log_z) = chain::marginals(&w.emit, &trans);
        loss_sum += log_z - chain::sequence_score(&w.emit, &trans, gold);

        let mut d_emit = vec![[0.0f64; 2]; w.len];
        for t in 0..w.len {
            let y = gold[t] as usize;
            d_emit[t][0] = node[t][0] / batch;
            d_emit[t][1] = node[t][1] / batch;
            d_emit[t][y] -= 1.0 / batch;
        }
        for t in 1..w.len {
            let (j, k) = (gold[t - 1] as usize, gold[t] as usize);
            for jj in 0..2 {
                for kk in 0..2 {
                    grads.trans[(jj, kk)] += edge[t - 1][jj][kk] / batch;
                }
            }
            grads.trans[(j, k)] -= 1.0 / batch;
        }

        let mut d_h2 = Array2::zeros((w.len, 2 * cfg.lstm_units));
        for t in 0..w.len {
            let h = w.lstm2_out.row(t);
            for y in 0..2 {
                grads.emit_w.row_mut(y).scaled_add(d_emit[t][y], &h);
                grads.emit_b[y] += d_emit[t][y];
            }
            let mut row = d_h2.row_mut(t);
            row.scaled_add(d_emit[t][0], &params.emit_w.row(0));
            row.scaled_add(d_emit[t][1], &params.emit_w.row(1));
        }

        let d_h1 = bilstm_backward(&params.lstm2, &w.lstm2_cache, &d_h2, &mut grads.lstm2);
        let d_flat = bilstm_backward(&params.lstm1, &w.lstm1_cache, &d_h1, &mut grads.lstm1);
        let d_pool = d_flat
            .to_shape((w.len, cfg.window, f_dim))
            .expect("contiguous")
            .to_owned();

        let mut d_drop = Array3::zeros((w.len, cfg.window, f_dim));
        for t in 0..w.len {
            for k in 0..cfg.window {
                for f in 0..f_dim {
                    let arg = w.pool_arg[(t, k, f)];
                    d_drop[(t, arg, f)] += d_pool[(t, k, f)];
                }
            }
        }
        // dropout backward: elementwise factor
        let d_bn_out = &d_drop * &w.drop_factor;
        d_bn_out_all.push(d_bn_out);
    }

    // phase 2: batch-norm backward across the whole batch
    let n = cache.bn_count.max(1) as f64;
    let std: Array1<f64> = cache.batch_var.mapv(|v| (v + BN_EPS).sqrt());
    let mut sum_dxhat = Array1::<f64>::zeros(f_dim);
    let mut sum_dxhat_xhat = Array1::<f64>::zeros(f_dim);
    for (w, d_bn_out) in cache.words.iter().zip(&d_bn_out_all) {
        for t in 0..w.len {
            for k in 0..cfg.window {
                for f in 0..f_dim {
                    let dy = d_bn_out[(t, k, f)];
                    let xhat = w.bn_xhat[(t, k, f)];
                    grads.bn_gamma[f] += dy * xhat;
                    grads.bn_beta[f] += dy;
                    let dxhat = dy * params.bn_gamma[f];
                    sum_dxhat[f] += dxhat;
                    sum_dxhat_xhat[f] += dxhat * xhat;
                }
            }
        }
    }

    // phase 3: conv + embedding backward per word
    let pad = (cfg.conv_kernel - 1) / 2;
    for (wi, (w, d_bn_out)) in cache.words.iter().zip(&d_bn_out_all).enumerate() {
        let ids = &tensor.ids[wi];
        for t in 0..w.len {
            let mut d_conv_t = Array2::zeros((cfg.window, f_dim));
            for k in 0..cfg.window {
                for f in 0..f_dim {
                    let dy = d_bn_out[(t, k, f)];
                    let dxhat = dy * params.bn_gamma[f];
                    let xhat = w.bn_xhat[(t, k, f)];
                    d_conv_t[(k, f)] = (dxhat
                        - sum_dxhat[f] / n
                        - xhat * sum_dxhat_xhat[f] / n)
                        / std[f];
                }
            }
            let x = w.embedded.index_axis(Axis(0), t);
            let mut d_x = Array2::<f64>::zeros((cfg.window, cfg.embed_dim));
            for k in 0..cfg.window {
                let dc = d_conv_t.row(k);
                grads.conv_b += &dc;
                for j in 0..cfg.conv_kernel {
                    let src = k as isize + j as isize - pad as isize;
                    if src >= 0 && (src as usize) < cfg.window {
                        let src = src as usize;
                        for f in 0..f_dim {
                            let g = dc[f];
                            if g != 0.0 {
                                grads
                                    .conv_w
                                    .index_axis_mut(Axis(0), f)
                                    .row_mut(j)
                                    .scaled_add(g, &x.row(src));
                            }
                        }
                        let wj = params.conv_w.index_axis(Axis(1), j);
                        d_x.row_mut(src).scaled_add(1.0, &wj.t().dot(&dc));
                    }
                }
            }
            for k in 0..cfg.window {
                grads
                    .embedding
                    .row_mut(ids[(t, k)])
                    .scaled_add(1.0, &d_x.row(k));
            }
        }
    }

    (loss_sum / batch, grads)
}

/// A trained tagger bound to its alphabet and configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel {
    pub cfg: NeuralConfig,
    pub alphabet: Alphabet,
    pub params: NeuralParams,
}

impl NeuralModel {
    /// Viterbi decoding over the CRF head, real positions only.
    pub fn predict(&self, word: &str) -> Result<BoundaryVector> {
        let tensor = tensorize(&[word], &self.alphabet, &self.cfg)?;
        let (scores, _) = forward_batch(&self.params, &self.cfg, &tensor, Mode::Eval);
        Ok(BoundaryVector::new(chain::viterbi(
            &scores[0],
            &self.params.trans_matrix(),
        )))
    }

    /// Inference helper for words beyond the token limit: the first
    /// `token_len` letters are decoded, the rest get no breaks. Returns
    /// whether truncation happened.
    pub fn predict_truncating(&self, word: &str) -> Result<(BoundaryVector, bool)> {
        let letters: Vec<char> = word.chars().collect();
        if letters.len() <= self.cfg.token_len {
            return Ok((self.predict(word)?, false));
        }
        let head: String = letters[..self.cfg.token_len].iter().collect();
        let head_bounds = self.predict(&head)?;
        let mut labels = head_bounds.labels().to_vec();
        labels.resize(letters.len(), false);
        // no break right at the cut
        labels[self.cfg.token_len - 1] = false;
        Ok((BoundaryVector::new(labels), true))
    }

    /// Features from the first BiLSTM layer (the fusion trunk surface):
    /// embed, conv, eval-mode batch norm, pool, flatten, BiLSTM-1.
    pub fn trunk_forward(&self, word: &str) -> Result<Array2<f64>> {
        let tensor = tensorize(&[word], &self.alphabet, &self.cfg)?;
        let (_, cache) = forward_batch(&self.params, &self.cfg, &tensor, Mode::Eval);
        Ok(cache.words[0].lstm1_out.clone())
    }

    /// SHA-256 over the parameter bytes in serialization order; used as the
    /// frozen-trunk checksum and as the fusion model's trunk reference.
    pub fn param_hash(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for (name, view) in self.params.flat_views() {
            h.update(name.as_bytes());
            for v in view {
                h.update(v.to_le_bytes());
            }
        }
        for v in self
            .params
            .bn_run_mean
            .iter()
            .chain(self.params.bn_run_var.iter())
        {
            h.update(v.to_le_bytes());
        }
        h.finalize().into()
    }
}

#[cfg(test)]
mod tests;
