//! Fusion of a pretrained orthographic tagger (A) and phonetic tagger (B).
//!
//! Both trunks are frozen and truncated after their first BiLSTM. Their
//! per-position features pass through heavy dropout (p = 0.5); dot-product
//! attention from each orthographic position over all phonetic positions
//! aligns the channels, which usually differ in length ("proteine" has 8
//! letters, "prote'jin@" has 10). The attention context joins the
//! orthographic features in a fresh BiLSTM with a per-position softmax
//! head; only these head parameters train. Trunk immutability is enforced
//! by parameter checksums.

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::neural::layers::{bilstm_backward, bilstm_forward, BiLstmCache, BiLstmParams};
use crate::neural::NeuralModel;
use crate::rng::SplitMix64;
use crate::word::BoundaryVector;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

/// How the orthographic features and the attention context merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    Concat,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub dropout_p: f64,
    pub head_lstm_units: usize,
    pub combine: Combine,
    /// Scale attention logits by 1/sqrt(d); off by default (raw dot product).
    pub scale_attention: bool,
    pub epochs_max: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            dropout_p: 0.5,
            head_lstm_units: 128,
            combine: Combine::Concat,
            scale_attention: false,
            epochs_max: 40,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl FusionConfig {
    pub fn small(seed: u64) -> Self {
        Self {
            head_lstm_units: 16,
            epochs_max: 12,
            batch_size: 16,
            learning_rate: 0.02,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidConfig("dropout_p must be in [0,1)".into()));
        }
        if self.head_lstm_units == 0 || self.batch_size == 0 || self.epochs_max == 0 {
            return Err(Error::InvalidConfig("fusion dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Trainable fusion head: one BiLSTM plus a softmax projection.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionHeadParams {
    pub lstm: BiLstmParams,
    /// [2 x 2*head_lstm_units]
    pub out_w: Array2<f64>,
    pub out_b: Array1<f64>,
}

impl FusionHeadParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            lstm: BiLstmParams::zeros(input_dim, hidden),
            out_w: Array2::zeros((2, 2 * hidden)),
            out_b: Array1::zeros(2),
        }
    }

    pub fn init(input_dim: usize, hidden: usize, rng: &mut SplitMix64) -> Self {
        let mut p = Self::zeros(input_dim, hidden);
        for dir in [&mut p.lstm.fwd, &mut p.lstm.bwd] {
            let bound_x = 1.0 / (input_dim as f64).sqrt();
            for v in dir.wx.iter_mut() {
                *v = rng.next_range(-bound_x, bound_x);
            }
            let bound_h = 1.0 / (hidden as f64).sqrt();
            for v in dir.wh.iter_mut() {
                *v = rng.next_range(-bound_h, bound_h);
            }
            for u in hidden..2 * hidden {
                dir.b[u] = 1.0;
            }
        }
        let bound = 1.0 / (2.0 * hidden as f64).sqrt();
        for v in p.out_w.iter_mut() {
            *v = rng.next_range(-bound, bound);
        }
        p
    }

    pub fn flat_views(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("head_fwd_wx", self.lstm.fwd.wx.as_slice().unwrap()),
            ("head_fwd_wh", self.lstm.fwd.wh.as_slice().unwrap()),
            ("head_fwd_b", self.lstm.fwd.b.as_slice().unwrap()),
            ("head_bwd_wx", self.lstm.bwd.wx.as_slice().unwrap()),
            ("head_bwd_wh", self.lstm.bwd.wh.as_slice().unwrap()),
            ("head_bwd_b", self.lstm.bwd.b.as_slice().unwrap()),
            ("head_out_w", self.out_w.as_slice().unwrap()),
            ("head_out_b", self.out_b.as_slice().unwrap()),
        ]
    }

    pub fn flat_views_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.lstm.fwd.wx.as_slice_mut().unwrap(),
            self.lstm.fwd.wh.as_slice_mut().unwrap(),
            self.lstm.fwd.b.as_slice_mut().unwrap(),
            self.lstm.bwd.wx.as_slice_mut().unwrap(),
            self.lstm.bwd.wh.as_slice_mut().unwrap(),
            self.lstm.bwd.b.as_slice_mut().unwrap(),
            self.out_w.as_slice_mut().unwrap(),
            self.out_b.as_slice_mut().unwrap(),
        ]
    }

    pub fn quantize_f32(&mut self) {
        for view in self.flat_views_mut() {
            for v in view {
                *v = *v as f32 as f64;
            }
        }
    }

    fn zeros_like(other: &Self) -> Self {
        let mut z = other.clone();
        for view in z.flat_views_mut() {
            for v in view {
                *v = 0.0;
            }
        }
        z
    }
}

/// The complete fusion model. Trunks are frozen; their checksums are the
/// model's references to them.
#[derive(Debug, Clone)]
pub struct FusionModel {
    pub cfg: FusionConfig,
    pub trunk_a: NeuralModel,
    pub trunk_b: NeuralModel,
    pub trunk_a_hash: [u8; 32],
    pub trunk_b_hash: [u8; 32],
    pub head: FusionHeadParams,
}

/// Dot-product attention: for each query row of `a`, softmax-weighted sum
/// of the rows of `b`. Returns the contexts and the weight matrix; each
/// weight row sums to 1.
pub fn attend(a: &Array2<f64>, b: &Array2<f64>, scale: bool) -> Result<(Array2<f64>, Array2<f64>)> {
    if b.nrows() == 0 {
        return Err(Error::DegenerateMask);
    }
    if a.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch {
            expected: format!("key width {}", a.ncols()),
            actual: format!("{}", b.ncols()),
        });
    }
    let factor = if scale {
        1.0 / (a.ncols() as f64).sqrt()
    } else {
        1.0
    };
    let mut weights = a.dot(&b.t());
    weights *= factor;
    for mut row in weights.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        row /= total;
    }
    let context = weights.dot(b);
    Ok((context, weights))
}

fn dropout(
    x: &Array2<f64>,
    p: f64,
    rng: &mut Option<&mut SplitMix64>,
) -> Array2<f64> {
    match rng {
        Some(rng) => {
            let keep = 1.0 / (1.0 - p);
            let mut out = x.clone();
            for v in out.iter_mut() {
                *v = if rng.next_f64() < p { 0.0 } else { *v * keep };
            }
            out
        }
        None => x.clone(),
    }
}

struct HeadCache {
    lstm_cache: BiLstmCache,
    head_out: Array2<f64>,
    probs: Array2<f64>,
}

/// Head forward from trunk features. `rng` enables the p=0.5 dropout and
/// is only used in training.
fn head_forward(
    head: &FusionHeadParams,
    cfg: &FusionConfig,
    a_out: &Array2<f64>,
    b_out: &Array2<f64>,
    mut rng: Option<&mut SplitMix64>,
) -> Result<(Array2<f64>, HeadCache)> {
    let a_drop = dropout(a_out, cfg.dropout_p, &mut rng);
    let b_drop = dropout(b_out, cfg.dropout_p, &mut rng);
    let (context, _) = attend(&a_drop, &b_drop, cfg.scale_attention)?;
    let lo = a_out.nrows();
    let comb = match cfg.combine {
        Combine::Concat => {
            let mut comb = Array2::zeros((lo, a_drop.ncols() + context.ncols()));
            for t in 0..lo {
                comb.row_mut(t)
                    .slice_mut(ndarray::s![..a_drop.ncols()])
                    .assign(&a_drop.row(t));
                comb.row_mut(t)
                    .slice_mut(ndarray::s![a_drop.ncols()..])
                    .assign(&context.row(t));
            }
            comb
        }
        Combine::Sum => {
            if a_drop.ncols() != context.ncols() {
                return Err(Error::ShapeMismatch {
                    expected: format!("sum combine needs equal widths ({})", a_drop.ncols()),
                    actual: format!("{}", context.ncols()),
                });
            }
            &a_drop + &context
        }
    };
    let (head_out, lstm_cache) = bilstm_forward(&head.lstm, &comb);
    let mut logits = Array2::zeros((lo, 2));
    let mut probs = Array2::zeros((lo, 2));
    for t in 0..lo {
        let h = head_out.row(t);
        let l0 = head.out_w.row(0).dot(&h) + head.out_b[0];
        let l1 = head.out_w.row(1).dot(&h) + head.out_b[1];
        logits[(t, 0)] = l0;
        logits[(t, 1)] = l1;
        let m = l0.max(l1);
        let e0 = (l0 - m).exp();
        let e1 = (l1 - m).exp();
        probs[(t, 0)] = e0 / (e0 + e1);
        probs[(t, 1)] = e1 / (e0 + e1);
    }
    Ok((
        logits,
        HeadCache {
            lstm_cache,
            head_out,
            probs,
        },
    ))
}

impl FusionModel {
    /// Per-position class scores for one orthographic/phonetic pair.
    /// The output always has the orthographic length.
    pub fn forward(
        &self,
        orth: &str,
        phon: &str,
        rng: Option<&mut SplitMix64>,
    ) -> Result<Array2<f64>> {
        let a_out = self.trunk_a.trunk_forward(orth)?;
        let b_out = self.trunk_b.trunk_forward(phon)?;
        let (logits, _) = head_forward(&self.head, &self.cfg, &a_out, &b_out, rng)?;
        Ok(logits)
    }

    /// Argmax decoding; ties fall to "no break".
    pub fn predict(&self, orth: &str, phon: &str) -> Result<BoundaryVector> {
        let logits = self.forward(orth, phon, None)?;
        Ok(BoundaryVector::new(
            (0..logits.nrows())
                .map(|t| logits[(t, 1)] > logits[(t, 0)])
                .collect(),
        ))
    }

    pub fn verify_trunks(&self) -> Result<()> {
        if self.trunk_a.param_hash() != self.trunk_a_hash
            || self.trunk_b.param_hash() != self.trunk_b_hash
        {
            return Err(Error::TrunkMutation);
        }
        Ok(())
    }
}

/// One paired training example: target boundaries live on the orthographic
/// channel.
#[derive(Debug, Clone)]
pub struct FusionSample {
    pub orth: String,
    pub phon: String,
    pub gold: BoundaryVector,
}

/// Extract the paired subset of a dataset. Words without a phonetic
/// channel are excluded; a dataset with no paired words at all is a
/// `MissingPhonetic` error.
pub fn paired_samples(ds: &Dataset) -> Result<Vec<FusionSample>> {
    let samples: Vec<FusionSample> = ds
        .iter()
        .filter(|e| e.has_phon())
        .map(|e| FusionSample {
            orth: e.orth.clone(),
            phon: e.phon.clone().unwrap(),
            gold: e.orth_bounds.clone(),
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::MissingPhonetic(format!(
            "dataset '{}' has no words with a phonetic channel",
            ds.name
        )));
    }
    Ok(samples)
}

/// Validation word error rate of a head over precomputed trunk features.
fn head_ower(
    head: &FusionHeadParams,
    cfg: &FusionConfig,
    feats: &[(Array2<f64>, Array2<f64>)],
    samples: &[FusionSample],
) -> Result<f64> {
    let mut wrong = 0usize;
    for ((a_out, b_out), sample) in feats.iter().zip(samples) {
        let (logits, _) = head_forward(head, cfg, a_out, b_out, None)?;
        let pred = BoundaryVector::new(
            (0..logits.nrows())
                .map(|t| logits[(t, 1)] > logits[(t, 0)])
                .collect(),
        );
        if pred != sample.gold {
            wrong += 1;
        }
    }
    Ok(100.0 * wrong as f64 / samples.len().max(1) as f64)
}

/// Loss and head gradients for one batch of precomputed trunk features.
fn head_loss_and_grads(
    head: &FusionHeadParams,
    cfg: &FusionConfig,
    batch: &[(&(Array2<f64>, Array2<f64>), &FusionSample)],
    rng: &mut SplitMix64,
) -> Result<(f64, FusionHeadParams)> {
    let mut grads = FusionHeadParams::zeros_like(head);
    let scale = 1.0 / batch.len().max(1) as f64;
    let mut loss = 0.0;
    for ((a_out, b_out), sample) in batch {
        let (_, cache) = head_forward(head, cfg, a_out, b_out, Some(rng))?;
        let lo = a_out.nrows();
        let mut d_head_out = Array2::zeros((lo, head.out_w.ncols()));
        for t in 0..lo {
            let gold = sample.gold.get(t) as usize;
            loss -= cache.probs[(t, gold)].max(1e-300).ln() * scale;
            for y in 0..2 {
                let d_logit = (cache.probs[(t, y)] - f64::from(y == gold)) * scale;
                grads
                    .out_w
                    .row_mut(y)
                    .scaled_add(d_logit, &cache.head_out.row(t));
                grads.out_b[y] += d_logit;
                d_head_out
                    .row_mut(t)
                    .scaled_add(d_logit, &head.out_w.row(y));
            }
        }
        // gradient stops at the frozen trunk features
        bilstm_backward(&head.lstm, &cache.lstm_cache, &d_head_out, &mut grads.lstm);
    }
    Ok((loss, grads))
}

/// Training outcome.
pub struct FusionReport {
    pub val_ower_curve: Vec<f64>,
    pub best_epoch: usize,
}

/// Train the fusion head on paired samples with frozen trunks A and B.
/// Trunk features are precomputed once (the trunks never change), and the
/// trunk checksums are verified before and after training.
pub fn train_fusion(
    train: &[FusionSample],
    val: &[FusionSample],
    cfg: &FusionConfig,
    trunk_a: &NeuralModel,
    trunk_b: &NeuralModel,
) -> Result<(FusionModel, FusionReport)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::EmptyDataset("fusion training needs train and val".into()));
    }
    if trunk_a.cfg.lstm_units != trunk_b.cfg.lstm_units {
        return Err(Error::ShapeMismatch {
            expected: format!("trunk feature width {}", 2 * trunk_a.cfg.lstm_units),
            actual: format!("{}", 2 * trunk_b.cfg.lstm_units),
        });
    }
    let hash_a = trunk_a.param_hash();
    let hash_b = trunk_b.param_hash();

    let trunk_feats = |samples: &[FusionSample]| -> Result<Vec<(Array2<f64>, Array2<f64>)>> {
        samples
            .iter()
            .map(|s| Ok((trunk_a.trunk_forward(&s.orth)?, trunk_b.trunk_forward(&s.phon)?)))
            .collect()
    };
    let train_feats = trunk_feats(train)?;
    let val_feats = trunk_feats(val)?;

    let feat_width = 2 * trunk_a.cfg.lstm_units;
    let input_dim = match cfg.combine {
        Combine::Concat => 2 * feat_width,
        Combine::Sum => feat_width,
    };
    let mut rng = SplitMix64::new(cfg.seed);
    let mut head = FusionHeadParams::init(input_dim, cfg.head_lstm_units, &mut rng);
    let mut adam = HeadAdam::new(cfg.learning_rate, &head);

    let mut best = head.clone();
    let mut best_ower = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut curve = Vec::with_capacity(cfg.epochs_max);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs_max {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&(Array2<f64>, Array2<f64>), &FusionSample)> = chunk
                .iter()
                .map(|&i| (&train_feats[i], &train[i]))
                .collect();
            let (loss, grads) = head_loss_and_grads(&head, cfg, &batch, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!("non-finite loss in epoch {epoch}")));
            }
            adam.update(&mut head, &grads);
        }
        let ower = head_ower(&head, cfg, &val_feats, val)?;
        curve.push(ower);
        if ower < best_ower {
            best_ower = ower;
            best = head.clone();
            best_epoch = epoch;
        }
    }
    best.quantize_f32();

    if trunk_a.param_hash() != hash_a || trunk_b.param_hash() != hash_b {
        return Err(Error::TrunkMutation);
    }

    Ok((
        FusionModel {
            cfg: cfg.clone(),
            trunk_a: trunk_a.clone(),
            trunk_b: trunk_b.clone(),
            trunk_a_hash: hash_a,
            trunk_b_hash: hash_b,
            head: best,
        },
        FusionReport {
            val_ower_curve: curve,
            best_epoch,
        },
    ))
}

struct HeadAdam {
    lr: f64,
    step: u64,
    m: FusionHeadParams,
    v: FusionHeadParams,
}

impl HeadAdam {
    fn new(lr: f64, like: &FusionHeadParams) -> Self {
        Self {
            lr,
            step: 0,
            m: FusionHeadParams::zeros_like(like),
            v: FusionHeadParams::zeros_like(like),
        }
    }

    fn update(&mut self, params: &mut FusionHeadParams, grads: &FusionHeadParams) {
        let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        self.step += 1;
        let bc1 = 1.0 - b1.powi(self.step as i32);
        let bc2 = 1.0 - b2.powi(self.step as i32);
        let g_views = grads.flat_views();
        let mut p_views = params.flat_views_mut();
        let mut m_views = self.m.flat_views_mut();
        let mut v_views = self.v.flat_views_mut();
        for i in 0..p_views.len() {
            let g = g_views[i].1;
            for j in 0..g.len() {
                m_views[i][j] = b1 * m_views[i][j] + (1.0 - b1) * g[j];
                v_views[i][j] = b2 * v_views[i][j] + (1.0 - b2) * g[j] * g[j];
                p_views[i][j] -=
                    self.lr * (m_views[i][j] / bc1) / ((v_views[i][j] / bc2).sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::gen_synthetic;
    use crate::neural::{train_neural, NeuralConfig};

    fn trained_trunks(seed: u64) -> (NeuralModel, NeuralModel, Vec<FusionSample>, Vec<FusionSample>) {
        let ds = gen_synthetic("cv-ambig", 120, seed).unwrap();
        let samples = paired_samples(&ds).unwrap();
        let (train, val) = samples.split_at(100);
        let orth: Vec<(String, BoundaryVector)> = train
            .iter()
            .map(|s| (s.orth.clone(), s.gold.clone()))
            .collect();
        let ds_full = &ds;
        let phon: Vec<(String, BoundaryVector)> = ds_full
            .iter()
            .take(100)
            .map(|e| (e.phon.clone().unwrap(), e.phon_bounds.clone().unwrap()))
            .collect();
        let mut cfg = NeuralConfig::small(seed);
        cfg.epochs_max = 3;
        let (a, _) = train_neural(&orth, &orth, &cfg).unwrap();
        let (b, _) = train_neural(&phon, &phon, &cfg).unwrap();
        (a, b, train.to_vec(), val.to_vec())
    }

    #[test]
    fn attention_single_key_copies_it() {
        let a = Array2::from_shape_fn((4, 3), |(i, j)| (i + j) as f64);
        let b = Array2::from_shape_fn((1, 3), |(_, j)| j as f64 - 1.0);
        let (ctx, w) = attend(&a, &b, false).unwrap();
        for t in 0..4 {
            assert_eq!(w[(t, 0)], 1.0);
            for j in 0..3 {
                assert_eq!(ctx[(t, j)], b[(0, j)]);
            }
        }
    }

    #[test]
    fn attention_uniform_values_ignore_weights() {
        let mut rng = SplitMix64::new(8);
        let a = Array2::from_shape_fn((5, 4), |_| rng.next_range(-2.0, 2.0));
        // every key row identical -> context equals that row regardless of weights
        let row: Vec<f64> = (0..4).map(|_| rng.next_range(-1.0, 1.0)).collect();
        let b = Array2::from_shape_fn((6, 4), |(_, j)| row[j]);
        let (ctx, _) = attend(&a, &b, false).unwrap();
        for t in 0..5 {
            for j in 0..4 {
                assert!((ctx[(t, j)] - row[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attention_matches_naive_double_loop() {
        let mut rng = SplitMix64::new(21);
        let a = Array2::from_shape_fn((7, 5), |_| rng.next_range(-2.0, 2.0));
        let b = Array2::from_shape_fn((9, 5), |_| rng.next_range(-2.0, 2.0));
        for scale in [false, true] {
            let (ctx, weights) = attend(&a, &b, scale).unwrap();
            let factor = if scale { 1.0 / 5f64.sqrt() } else { 1.0 };
            for i in 0..7 {
                let mut exps = Vec::new();
                for j in 0..9 {
                    let mut dot = 0.0;
                    for d in 0..5 {
                        dot += a[(i, d)] * b[(j, d)];
                    }
                    exps.push((dot * factor).exp());
                }
                let z: f64 = exps.iter().sum();
                let mut want = vec![0.0; 5];
                for j in 0..9 {
                    for (d, w) in want.iter_mut().enumerate() {
                        *w += exps[j] / z * b[(j, d)];
                    }
                }
                for (d, w) in want.iter().enumerate() {
                    assert!((ctx[(i, d)] - w).abs() < 1e-9);
                }
                let row_sum: f64 = (0..9).map(|j| weights[(i, j)]).sum();
                assert!((row_sum - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn attention_rejects_empty_keys() {
        let a = Array2::zeros((3, 4));
        let b = Array2::zeros((0, 4));
        assert!(matches!(attend(&a, &b, false), Err(Error::DegenerateMask)));
    }

    #[test]
    fn output_length_follows_orthography() {
        let (a, b, train, val) = trained_trunks(3);
        let mut cfg = FusionConfig::small(3);
        cfg.epochs_max = 1;
        let (model, _) = train_fusion(&train, &val, &cfg, &a, &b).unwrap();
        for s in val.iter().take(10) {
            let logits = model.forward(&s.orth, &s.phon, None).unwrap();
            assert_eq!(logits.nrows(), s.orth.chars().count());
            let pred = model.predict(&s.orth, &s.phon).unwrap();
            assert_eq!(pred.len(), s.orth.chars().count());
        }
    }

    #[test]
    fn eval_forward_deterministic() {
        let (a, b, train, val) = trained_trunks(5);
        let mut cfg = FusionConfig::small(5);
        cfg.epochs_max = 1;
        let (model, _) = train_fusion(&train, &val, &cfg, &a, &b).unwrap();
        let s = &val[0];
        let x = model.forward(&s.orth, &s.phon, None).unwrap();
        let y = model.forward(&s.orth, &s.phon, None).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn trunks_stay_frozen() {
        let (a, b, train, val) = trained_trunks(7);
        let hash_a = a.param_hash();
        let hash_b = b.param_hash();
        let (model, _) = train_fusion(&train, &val, &FusionConfig::small(7), &a, &b).unwrap();
        assert_eq!(model.trunk_a_hash, hash_a);
        assert_eq!(model.trunk_b_hash, hash_b);
        model.verify_trunks().unwrap();
        assert_eq!(a.param_hash(), hash_a);
        assert_eq!(b.param_hash(), hash_b);
    }

    #[test]
    fn single_pair_is_memorized() {
        let (a, b, train, _) = trained_trunks(11);
        let one = vec![train[0].clone()];
        let mut cfg = FusionConfig::small(11);
        cfg.epochs_max = 150;
        cfg.dropout_p = 0.0;
        let (model, _) = train_fusion(&one, &one, &cfg, &a, &b).unwrap();
        assert_eq!(model.predict(&one[0].orth, &one[0].phon).unwrap(), one[0].gold);
    }

    #[test]
    fn head_gradients_match_finite_differences() {
        let (a, b, train, _) = trained_trunks(13);
        let cfg = FusionConfig::small(13);
        let feats: Vec<(Array2<f64>, Array2<f64>)> = train
            .iter()
            .take(3)
            .map(|s| {
                (
                    a.trunk_forward(&s.orth).unwrap(),
                    b.trunk_forward(&s.phon).unwrap(),
                )
            })
            .collect();
        let samples: Vec<&FusionSample> = train.iter().take(3).collect();
        let mut rng = SplitMix64::new(400);
        let head = FusionHeadParams::init(4 * a.cfg.lstm_units, cfg.head_lstm_units, &mut rng);

        let batch: Vec<(&(Array2<f64>, Array2<f64>), &FusionSample)> =
            feats.iter().zip(samples.iter().copied()).collect();
        let loss_of = |h: &FusionHeadParams| -> f64 {
            let mut rng = SplitMix64::new(31);
            head_loss_and_grads(h, &cfg, &batch, &mut rng).unwrap().0
        };
        let mut rng2 = SplitMix64::new(31);
        let (_, grads) = head_loss_and_grads(&head, &cfg, &batch, &mut rng2).unwrap();

        let h_step = 1e-5;
        let lens: Vec<usize> = head.flat_views().iter().map(|(_, v)| v.len()).collect();
        for (bi, len) in lens.iter().enumerate() {
            let stride = (len / 4).max(1);
            for j in (0..*len).step_by(stride) {
                let mut plus = head.clone();
                plus.flat_views_mut()[bi][j] += h_step;
                let mut minus = head.clone();
                minus.flat_views_mut()[bi][j] -= h_step;
                let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h_step);
                let an = grads.flat_views()[bi].1[j];
                let abs_err = (an - fd).abs();
                assert!(
                    abs_err < 1e-7 || abs_err / an.abs().max(fd.abs()) < 1e-4,
                    "{}[{}]: {} vs {}",
                    head.flat_views()[bi].0,
                    j,
                    an,
                    fd
                );
            }
        }
    }

    #[test]
    fn missing_phonetic_channel_is_an_error() {
        let ds = gen_synthetic("cv", 20, 1).unwrap();
        assert!(matches!(
            paired_samples(&ds),
            Err(Error::MissingPhonetic(_))
        ));
    }
}
