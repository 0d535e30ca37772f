//! Windowed-feature linear-chain CRF over per-letter break labels,
//! trained from scratch by L2-regularized maximum likelihood.

pub mod chain;
pub mod features;
mod train;

pub use features::FeatureExtractor;
pub use train::{regularized_log_likelihood, train_crf, CrfHyper};

use crate::word::BoundaryVector;
use std::collections::HashMap;

/// Trained CRF: feature vocabulary, per-label feature weights, and the
/// 2x2 transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub extractor: FeatureExtractor,
    /// Feature names in id order; ids are assigned in first-seen order
    /// during training so models serialize deterministically.
    pub feature_names: Vec<String>,
    pub weights: Vec<[f64; 2]>,
    pub transitions: [[f64; 2]; 2],
    pub l2: f64,
    index: HashMap<String, u32>,
}

impl CrfModel {
    pub fn new(
        extractor: FeatureExtractor,
        feature_names: Vec<String>,
        weights: Vec<[f64; 2]>,
        transitions: [[f64; 2]; 2],
        l2: f64,
    ) -> Self {
        let index = feature_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Self {
            extractor,
            feature_names,
            weights,
            transitions,
            l2,
            index,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    /// Known feature ids per position. Features never seen in training are
    /// skipped; unknown characters still hit the sentinel-free templates,
    /// they just rarely resolve to known ids.
    pub fn feature_ids(&self, word: &str) -> Vec<Vec<u32>> {
        self.extractor
            .extract(word)
            .into_iter()
            .map(|feats| {
                feats
                    .iter()
                    .filter_map(|f| self.index.get(f).copied())
                    .collect()
            })
            .collect()
    }

    /// Per-position label scores from the active features.
    pub fn emissions(&self, word: &str) -> Vec<[f64; 2]> {
        self.emissions_from_ids(&self.feature_ids(word))
    }

    pub(crate) fn emissions_from_ids(&self, ids: &[Vec<u32>]) -> Vec<[f64; 2]> {
        ids.iter()
            .map(|feats| {
                let mut e = [0.0f64; 2];
                for &f in feats {
                    let w = self.weights[f as usize];
                    e[0] += w[0];
                    e[1] += w[1];
                }
                e
            })
            .collect()
    }

    /// `log Z` over all `2^L` labelings, by the forward recursion.
    pub fn log_partition(&self, word: &str) -> f64 {
        chain::log_partition(&self.emissions(word), &self.transitions)
    }

    /// Highest-scoring labeling; ties break toward "no break".
    pub fn viterbi(&self, word: &str) -> BoundaryVector {
        BoundaryVector::new(chain::viterbi(&self.emissions(word), &self.transitions))
    }

    /// Flat parameter vector in serialization order, used for hashing and
    /// byte-exact model files.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.weights.len() * 2 + 4);
        for w in &self.weights {
            out.extend_from_slice(w);
        }
        for row in &self.transitions {
            out.extend_from_slice(row);
        }
        out
    }

    /// Round every parameter through f32 so the f32 model file format
    /// round-trips without changing predictions.
    pub fn quantize_f32(&mut self) {
        for w in &mut self.weights {
            w[0] = w[0] as f32 as f64;
            w[1] = w[1] as f32 as f64;
        }
        for row in &mut self.transitions {
            row[0] = row[0] as f32 as f64;
            row[1] = row[1] as f32 as f64;
        }
    }
}
