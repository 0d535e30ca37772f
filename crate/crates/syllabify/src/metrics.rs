//! Evaluation metrics for per-letter break predictions.
//!
//! Six metrics are reported. OWER is the fraction of words with at least one
//! wrong letter decision. OLER pools letter decisions over the whole corpus.
//! HER is the fraction of gold breaks that were missed, FN/(TP+FN), and
//! recall is defined as its exact complement, `R = 100 - HER`, so the two
//! always agree to the last bit. Precision, recall, and F1 complete the set.
//!
//! Counting covers every letter position, including the final letter of each
//! word (whose gold label is always 0): the 11-letter word `wereldbeker`
//! scored against `wereld-beker` gives 2 errors out of 11 decisions, an OLER
//! of 18.18%.

use crate::error::{Error, Result};
use crate::word::BoundaryVector;
use serde::{Deserialize, Serialize};

/// Pooled per-letter confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

/// Score one word. Counts all letter positions; the word is correct iff it
/// has no false positives and no false negatives.
pub fn score_word(gold: &BoundaryVector, pred: &BoundaryVector) -> Result<(ConfusionCounts, bool)> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            context: "score_word",
            expected: gold.len(),
            actual: pred.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (g, p) in gold.iter().zip(pred.iter()) {
        match (g, p) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    let correct = c.fp == 0 && c.fn_ == 0;
    Ok((c, correct))
}

/// Corpus-level metrics, micro-averaged over pooled counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    pub word_errors: u64,
    pub word_total: u64,
    pub ower_pct: f64,
    pub oler_pct: f64,
    pub her_pct: f64,
    pub precision_pct: f64,
    pub recall_pct: f64,
    pub f1_pct: f64,
}

/// Aggregate per-word results into a report.
///
/// Degenerate denominators follow a fixed convention: with no predicted
/// breaks (tp+fp = 0), precision is 100 when fn = 0 and 0 otherwise; with no
/// gold breaks (tp+fn = 0), recall is 100 when fp = 0 and 0 otherwise, and
/// HER stays the exact complement of recall.
pub fn aggregate(results: impl IntoIterator<Item = (ConfusionCounts, bool)>) -> Result<EvalReport> {
    let mut counts = ConfusionCounts::default();
    let mut word_errors = 0u64;
    let mut word_total = 0u64;
    for (c, correct) in results {
        counts.add(&c);
        word_total += 1;
        if !correct {
            word_errors += 1;
        }
    }
    if word_total == 0 {
        return Err(Error::EmptyDataset("aggregate needs at least one word".into()));
    }
    Ok(report_from_counts(counts, word_errors, word_total))
}

/// Compute the six metrics from pooled counts.
pub fn report_from_counts(counts: ConfusionCounts, word_errors: u64, word_total: u64) -> EvalReport {
    let ConfusionCounts { tp, fp, fn_, tn } = counts;
    let ower_pct = 100.0 * word_errors as f64 / word_total as f64;
    let total = (tp + fp + fn_ + tn) as f64;
    let oler_pct = if total == 0.0 {
        0.0
    } else {
        100.0 * (fn_ + fp) as f64 / total
    };
    let her_pct = if tp + fn_ == 0 {
        if fp == 0 {
            0.0
        } else {
            100.0
        }
    } else {
        100.0 * fn_ as f64 / (tp + fn_) as f64
    };
    // Recall is derived from HER so that R + HER = 100 holds identically.
    let recall_pct = 100.0 - her_pct;
    let precision_pct = if tp + fp == 0 {
        if fn_ == 0 {
            100.0
        } else {
            0.0
        }
    } else {
        100.0 * tp as f64 / (tp + fp) as f64
    };
    let f1_pct = if precision_pct + recall_pct == 0.0 {
        0.0
    } else {
        2.0 * precision_pct * recall_pct / (precision_pct + recall_pct)
    };
    EvalReport {
        counts,
        word_errors,
        word_total,
        ower_pct,
        oler_pct,
        her_pct,
        precision_pct,
        recall_pct,
        f1_pct,
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

impl EvalReport {
    /// JSON with percentages rounded to 3 decimals, matching report files.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "fn": self.counts.fn_,
            "tn": self.counts.tn,
            "word_errors": self.word_errors,
            "word_total": self.word_total,
            "ower_pct": round3(self.ower_pct),
            "oler_pct": round3(self.oler_pct),
            "her_pct": round3(self.her_pct),
            "precision_pct": round3(self.precision_pct),
            "recall_pct": round3(self.recall_pct),
            "f1_pct": round3(self.f1_pct),
        })
    }

    /// One-line human-readable summary.
    pub fn summary(&self) -> String {
        format!(
            "OWER {:.3}%  OLER {:.3}%  HER {:.3}%  P {:.3}%  R {:.3}%  F1 {:.3}%  ({}/{} words wrong)",
            self.ower_pct,
            self.oler_pct,
            self.her_pct,
            self.precision_pct,
            self.recall_pct,
            self.f1_pct,
            self.word_errors,
            self.word_total
        )
    }
}
