use super::*;
use crate::crf::chain;

fn tiny_cfg() -> NeuralConfig {
    NeuralConfig {
        token_len: 8,
        window: 5,
        embed_dim: 4,
        conv_filters: 3,
        conv_kernel: 3,
        dropout_p: 0.2,
        pool_kernel: 3,
        lstm_units: 5,
        batch_size: 4,
        epochs_max: 10,
        learning_rate: 0.02,
        seed: 1,
    }
}

fn tiny_alphabet() -> Alphabet {
    Alphabet::from_words(["bakote", "ketabo"])
}

fn tiny_setup() -> (NeuralConfig, Alphabet, NeuralParams, WindowTensor, Vec<Vec<bool>>) {
    let cfg = tiny_cfg();
    let alphabet = tiny_alphabet();
    let mut rng = SplitMix64::new(17);
    let params = NeuralParams::init(&cfg, alphabet.len(), &mut rng);
    let words = ["bakote", "keta", "abo"];
    let tensor = tensorize(&words, &alphabet, &cfg).unwrap();
    let golds = vec![
        vec![false, true, false, true, false, false],
        vec![false, true, false, false],
        vec![true, false, false],
    ];
    (cfg, alphabet, params, tensor, golds)
}

#[test]
fn tensorize_window_uses_pad_sentinels() {
    let cfg = tiny_cfg();
    let alphabet = tiny_alphabet();
    let tensor = tensorize(&["abc"], &alphabet, &cfg).unwrap();
    let a = alphabet.lookup('a');
    let b = alphabet.lookup('b');
    let c = alphabet.lookup('c');
    let row: Vec<usize> = (0..5).map(|k| tensor.ids[0][(0, k)]).collect();
    assert_eq!(row, vec![Alphabet::PAD, Alphabet::PAD, a, b, c]);
    let row2: Vec<usize> = (0..5).map(|k| tensor.ids[0][(2, k)]).collect();
    assert_eq!(row2, vec![a, b, c, Alphabet::PAD, Alphabet::PAD]);
}

#[test]
fn tensorize_empty_batch() {
    let tensor = tensorize(&[], &tiny_alphabet(), &tiny_cfg()).unwrap();
    assert_eq!(tensor.batch_size(), 0);
    assert_eq!(tensor.dims(), (0, 8, 5));
}

#[test]
fn tensorize_rejects_long_words() {
    let cfg = tiny_cfg();
    let long = "a".repeat(cfg.token_len + 1);
    assert!(matches!(
        tensorize(&[long.as_str()], &tiny_alphabet(), &cfg),
        Err(Error::WordTooLong { .. })
    ));
}

#[test]
fn shape_trace_small_config() {
    let (cfg, _, params, tensor, _) = tiny_setup();
    let (_, cache) = forward_batch(&params, &cfg, &tensor, Mode::Eval);
    let (embedded, flat, feats) = cache.assemble_trace(&tensor, &cfg);
    assert_eq!(embedded.dim(), (3, 8, 5, 4));
    assert_eq!(flat.dim(), (3, 8, 15));
    assert_eq!(feats.dim(), (3, 8, 10));
    assert_eq!(cfg.flat_width(), 15);
}

#[test]
fn eval_forward_is_deterministic() {
    let (cfg, _, params, tensor, _) = tiny_setup();
    let (a, _) = forward_batch(&params, &cfg, &tensor, Mode::Eval);
    let (b, _) = forward_batch(&params, &cfg, &tensor, Mode::Eval);
    assert_eq!(a, b);
}

#[test]
fn crf_loss_zero_params_is_l_log2() {
    let emit = vec![vec![[0.0, 0.0]; 7]];
    let golds = vec![vec![false; 7]];
    let loss = crf_loss(&emit, &[[0.0; 2]; 2], &golds);
    assert!((loss - 7.0 * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn crf_loss_is_nonnegative_and_matches_enumeration() {
    let mut rng = SplitMix64::new(4);
    for len in 1..=10 {
        let emit: Vec<[f64; 2]> = (0..len)
            .map(|_| [rng.next_range(-2.0, 2.0), rng.next_range(-2.0, 2.0)])
            .collect();
        let trans = [
            [rng.next_range(-1.0, 1.0), rng.next_range(-1.0, 1.0)],
            [rng.next_range(-1.0, 1.0), rng.next_range(-1.0, 1.0)],
        ];
        let gold: Vec<bool> = (0..len).map(|_| rng.next_f64() < 0.5).collect();
        let loss = crf_loss(&[emit.clone()], &trans, &[gold.clone()]);
        assert!(loss >= -1e-12);
        // brute force: -log p(gold) over all 2^len labelings
        let mut log_z = f64::NEG_INFINITY;
        for m in 0..(1u32 << len) {
            let labels: Vec<bool> = (0..len).map(|i| (m >> (len - 1 - i)) & 1 == 1).collect();
            log_z = chain::log_sum_exp2(log_z, chain::sequence_score(&emit, &trans, &labels));
        }
        let want = log_z - chain::sequence_score(&emit, &trans, &gold);
        assert!((loss - want).abs() < 1e-9, "len {len}");
    }
}

#[test]
fn padding_length_does_not_affect_loss_or_gradients() {
    let (cfg, alphabet, params, _, golds) = tiny_setup();
    let words = ["bakote", "keta", "abo"];
    let mut wide = cfg.clone();
    wide.token_len = 12;
    let t_a = tensorize(&words, &alphabet, &cfg).unwrap();
    let t_b = tensorize(&words, &alphabet, &wide).unwrap();
    let mut rng_a = SplitMix64::new(7);
    let mut rng_b = SplitMix64::new(7);
    let (_, cache_a) = forward_batch(&params, &cfg, &t_a, Mode::Train(&mut rng_a));
    let (_, cache_b) = forward_batch(&params, &wide, &t_b, Mode::Train(&mut rng_b));
    let (loss_a, grads_a) = backward_batch(&params, &cfg, &t_a, &cache_a, &golds);
    let (loss_b, grads_b) = backward_batch(&params, &wide, &t_b, &cache_b, &golds);
    assert_eq!(loss_a, loss_b);
    for ((name, ga), (_, gb)) in grads_a.flat_views().iter().zip(grads_b.flat_views()) {
        assert_eq!(*ga, gb, "block {name}");
    }
}

/// Central-difference gradient check over every parameter block.
pub(crate) fn check_gradients(
    cfg: &NeuralConfig,
    params: &NeuralParams,
    tensor: &WindowTensor,
    golds: &[Vec<bool>],
    probes_per_block: usize,
    tolerance: f64,
) {
    let dropout_seed = 4242;
    let loss_of = |p: &NeuralParams| -> f64 {
        let mut rng = SplitMix64::new(dropout_seed);
        let (scores, _) = forward_batch(p, cfg, tensor, Mode::Train(&mut rng));
        crf_loss(&scores, &p.trans_matrix(), golds)
    };
    let mut rng = SplitMix64::new(dropout_seed);
    let (_, cache) = forward_batch(params, cfg, tensor, Mode::Train(&mut rng));
    let (_, grads) = backward_batch(params, cfg, tensor, &cache, golds);

    let h = 1e-5;
    let blocks: Vec<(&'static str, usize)> = params
        .flat_views()
        .iter()
        .map(|(n, v)| (*n, v.len()))
        .collect();
    for (block_idx, (name, len)) in blocks.iter().enumerate() {
        let stride = (len / probes_per_block).max(1);
        for j in (0..*len).step_by(stride) {
            let mut plus = params.clone();
            plus.flat_views_mut()[block_idx][j] += h;
            let mut minus = params.clone();
            minus.flat_views_mut()[block_idx][j] -= h;
            let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            let an = grads.flat_views()[block_idx].1[j];
            let abs_err = (an - fd).abs();
            let denom = an.abs().max(fd.abs());
            assert!(
                abs_err < 1e-7 || abs_err / denom < tolerance,
                "{name}[{j}]: analytic {an} vs finite difference {fd}"
            );
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let (cfg, _, params, tensor, golds) = tiny_setup();
    check_gradients(&cfg, &params, &tensor, &golds, 4, 1e-4);
}

#[test]
fn untrained_zero_params_predict_all_zeros() {
    let cfg = tiny_cfg();
    let alphabet = tiny_alphabet();
    let model = NeuralModel {
        params: NeuralParams::zeros(&cfg, alphabet.len()),
        cfg,
        alphabet,
    };
    assert_eq!(model.predict("bakote").unwrap().to_string(), "000000");
}

#[test]
fn predict_matches_enumeration() {
    let (cfg, alphabet, params, _, _) = tiny_setup();
    let model = NeuralModel {
        cfg: cfg.clone(),
        alphabet,
        params,
    };
    for word in ["bakote", "keta", "abo", "b", "oektab"] {
        let tensor = tensorize(&[word], &model.alphabet, &cfg).unwrap();
        let (scores, _) = forward_batch(&model.params, &cfg, &tensor, Mode::Eval);
        let emit = &scores[0];
        let n = emit.len();
        let trans = model.params.trans_matrix();
        let mut best = f64::NEG_INFINITY;
        let mut best_labels = Vec::new();
        for m in 0..(1u32 << n) {
            let labels: Vec<bool> = (0..n).map(|i| (m >> (n - 1 - i)) & 1 == 1).collect();
            let s = chain::sequence_score(emit, &trans, &labels);
            if s > best {
                best = s;
                best_labels = labels;
            }
        }
        assert_eq!(model.predict(word).unwrap().labels(), &best_labels[..]);
    }
}

#[test]
fn predict_truncating_pads_with_zeros() {
    let (cfg, alphabet, params, _, _) = tiny_setup();
    let model = NeuralModel {
        cfg,
        alphabet,
        params,
    };
    let long = "bakotebakote"; // 12 letters > token_len 8
    let (bounds, truncated) = model.predict_truncating(long).unwrap();
    assert!(truncated);
    assert_eq!(bounds.len(), 12);
    assert!(!bounds.labels()[8..].iter().any(|&b| b));
}

#[test]
fn one_word_dataset_is_memorized() {
    let (word, bounds) = crate::word::encode_boundaries_str("ba-ko-te").unwrap();
    let samples = vec![(word.clone(), bounds.clone())];
    let mut cfg = tiny_cfg();
    cfg.epochs_max = 200;
    cfg.dropout_p = 0.0;
    let (model, _) = train_neural(&samples, &samples, &cfg).unwrap();
    assert_eq!(model.predict(&word).unwrap(), bounds);
}

#[test]
fn training_is_deterministic() {
    let ds = crate::corpus::gen_synthetic("cv", 40, 3).unwrap();
    let samples: Vec<(String, BoundaryVector)> = ds
        .iter()
        .map(|e| (e.orth.clone(), e.orth_bounds.clone()))
        .collect();
    let mut cfg = tiny_cfg();
    cfg.epochs_max = 3;
    cfg.token_len = 16;
    let (model_a, report_a) = train_neural(&samples, &samples, &cfg).unwrap();
    let (model_b, report_b) = train_neural(&samples, &samples, &cfg).unwrap();
    assert_eq!(report_a.val_ower_curve, report_b.val_ower_curve);
    for ((name, a), (_, b)) in model_a
        .params
        .flat_views()
        .iter()
        .zip(model_b.params.flat_views())
    {
        assert_eq!(*a, b, "block {name}");
    }
    assert_eq!(model_a.param_hash(), model_b.param_hash());
}
