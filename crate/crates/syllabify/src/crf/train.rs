//! CRF training: full-batch gradient ascent with backtracking line search
//! on the L2-regularized conditional log-likelihood. Deterministic for a
//! fixed corpus order; there is no stochastic component.

use super::chain;
use super::features::FeatureExtractor;
use super::CrfModel;
use crate::corpus::Dataset;
use crate::error::{Error, Result};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrfHyper {
    pub window: usize,
    pub l2: f64,
    pub max_iters: usize,
    /// Stop when the gradient max-norm falls below this.
    pub tol: f64,
    pub initial_step: f64,
}

impl Default for CrfHyper {
    fn default() -> Self {
        Self {
            window: 6,
            l2: 1.0,
            max_iters: 100,
            tol: 1e-4,
            initial_step: 0.5,
        }
    }
}

struct Objective<'a> {
    samples: &'a [(Vec<Vec<u32>>, Vec<bool>)],
    n_features: usize,
    l2: f64,
}

/// Parameters flattened as `weights[0][0], weights[0][1], ..., trans_00,
/// trans_01, trans_10, trans_11`.
impl Objective<'_> {
    fn unpack(&self, theta: &[f64]) -> (Vec<[f64; 2]>, [[f64; 2]; 2]) {
        let weights: Vec<[f64; 2]> = (0..self.n_features)
            .map(|i| [theta[2 * i], theta[2 * i + 1]])
            .collect();
        let t = &theta[2 * self.n_features..];
        (weights, [[t[0], t[1]], [t[2], t[3]]])
    }

    fn emissions(weights: &[[f64; 2]], feats: &[Vec<u32>]) -> Vec<[f64; 2]> {
        feats
            .iter()
            .map(|ids| {
                let mut e = [0.0f64; 2];
                for &f in ids {
                    e[0] += weights[f as usize][0];
                    e[1] += weights[f as usize][1];
                }
                e
            })
            .collect()
    }

    /// Regularized log-likelihood and its gradient.
    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let (weights, trans) = self.unpack(theta);
        let mut ll = 0.0;
        let mut grad = vec![0.0f64; theta.len()];
        let tbase = 2 * self.n_features;
        for (feats, gold) in self.samples {
            let emit = Self::emissions(&weights, feats);
            let (node, edge, log_z) = chain::marginals(&emit, &trans);
            ll += chain::sequence_score(&emit, &trans, gold) - log_z;
            for (t, ids) in feats.iter().enumerate() {
                let y_gold = gold[t] as usize;
                for &f in ids {
                    let base = 2 * f as usize;
                    grad[base + y_gold] += 1.0;
                    grad[base] -= node[t][0];
                    grad[base + 1] -= node[t][1];
                }
            }
            for t in 1..gold.len() {
                let (j, k) = (gold[t - 1] as usize, gold[t] as usize);
                grad[tbase + 2 * j + k] += 1.0;
                for (jj, row) in edge[t - 1].iter().enumerate() {
                    for (kk, &p) in row.iter().enumerate() {
                        grad[tbase + 2 * jj + kk] -= p;
                    }
                }
            }
        }
        for (g, &th) in grad.iter_mut().zip(theta.iter()) {
            *g -= self.l2 * th;
        }
        let penalty: f64 = theta.iter().map(|t| t * t).sum::<f64>() * self.l2 / 2.0;
        (ll - penalty, grad)
    }
}

/// Train on the orthographic channel of a dataset.
pub fn train_crf(train: &Dataset, hyper: &CrfHyper) -> Result<CrfModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset(format!("{} (crf training)", train.name)));
    }
    let extractor = FeatureExtractor::new(hyper.window);

    // feature vocabulary in first-seen order
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    let mut samples: Vec<(Vec<Vec<u32>>, Vec<bool>)> = Vec::with_capacity(train.len());
    for entry in train.iter() {
        let per_pos = extractor.extract(&entry.orth);
        let ids: Vec<Vec<u32>> = per_pos
            .into_iter()
            .map(|feats| {
                feats
                    .into_iter()
                    .map(|f| {
                        *index.entry(f.clone()).or_insert_with(|| {
                            names.push(f);
                            (names.len() - 1) as u32
                        })
                    })
                    .collect()
            })
            .collect();
        samples.push((ids, entry.orth_bounds.labels().to_vec()));
    }

    let objective = Objective {
        samples: &samples,
        n_features: names.len(),
        l2: hyper.l2,
    };
    let mut theta = vec![0.0f64; 2 * names.len() + 4];
    let (mut value, mut grad) = objective.eval(&theta);
    if !value.is_finite() {
        return Err(Error::Divergence("objective not finite at start".into()));
    }
    let mut step = hyper.initial_step;
    for _ in 0..hyper.max_iters {
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm < hyper.tol {
            break;
        }
        let gsq: f64 = grad.iter().map(|g| g * g).sum();
        // backtracking line search with an Armijo condition
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(grad.iter())
                .map(|(t, g)| t + step * g)
                .collect();
            let (cand_value, cand_grad) = objective.eval(&cand);
            if cand_value.is_finite() && cand_value >= value + 1e-4 * step * gsq {
                theta = cand;
                value = cand_value;
                grad = cand_grad;
                step = (step * 1.5).min(4.0);
                accepted = true;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
        if !accepted {
            break;
        }
        if !value.is_finite() {
            return Err(Error::Divergence("objective became non-finite".into()));
        }
    }

    let weights: Vec<[f64; 2]> = (0..names.len())
        .map(|i| [theta[2 * i], theta[2 * i + 1]])
        .collect();
    let t = &theta[2 * names.len()..];
    let mut model = CrfModel::new(
        extractor,
        names,
        weights,
        [[t[0], t[1]], [t[2], t[3]]],
        hyper.l2,
    );
    model.quantize_f32();
    Ok(model)
}

/// Regularized log-likelihood of a dataset under a model; exposed for the
/// ascent and finite-difference tests.
pub fn regularized_log_likelihood(model: &CrfModel, data: &Dataset) -> f64 {
    let mut ll = 0.0;
    for entry in data.iter() {
        let emit = model.emissions(&entry.orth);
        ll -= chain::sequence_nll(&emit, &model.transitions, entry.orth_bounds.labels());
    }
    let penalty: f64 = model
        .flat_params()
        .iter()
        .map(|t| t * t)
        .sum::<f64>()
        * model.l2
        / 2.0;
    ll - penalty
}
