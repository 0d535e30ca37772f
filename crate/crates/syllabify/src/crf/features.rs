//! Windowed character features for the CRF tagger.
//!
//! Each position sees the identities of the characters in a span of
//! `window` characters around it (offsets -window/2 .. window/2 - 1 for the
//! even default of 6), plus character bigrams and trigrams inside that
//! span. Positions beyond the word edges contribute start/end sentinels.

use std::fmt::Write;

/// Private-use sentinels so they can never collide with corpus characters.
const START: char = '\u{E000}';
const END: char = '\u{E001}';

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureExtractor {
    pub window: usize,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self { window: 6 }
    }
}

impl FeatureExtractor {
    pub fn new(window: usize) -> Self {
        Self { window: window.max(1) }
    }

    fn offsets(&self) -> (isize, isize) {
        let left = (self.window / 2) as isize;
        let right = self.window as isize - 1 - left;
        (-left, right)
    }

    /// Template strings for every position of the word. Deterministic:
    /// the same word always produces the same features in the same order.
    pub fn extract(&self, word: &str) -> Vec<Vec<String>> {
        let letters: Vec<char> = word.chars().collect();
        let n = letters.len() as isize;
        let at = |i: isize| -> char {
            if i < 0 {
                START
            } else if i >= n {
                END
            } else {
                letters[i as usize]
            }
        };
        let (lo, hi) = self.offsets();
        let mut out = Vec::with_capacity(letters.len());
        for pos in 0..n {
            let mut feats = Vec::new();
            for o in lo..=hi {
                let mut f = String::new();
                write!(f, "u{}={}", o, at(pos + o)).unwrap();
                feats.push(f);
            }
            for o in lo..hi {
                let mut f = String::new();
                write!(f, "b{}={}{}", o, at(pos + o), at(pos + o + 1)).unwrap();
                feats.push(f);
            }
            for o in lo..=(hi - 2) {
                let mut f = String::new();
                write!(
                    f,
                    "t{}={}{}{}",
                    o,
                    at(pos + o),
                    at(pos + o + 1),
                    at(pos + o + 2)
                )
                .unwrap();
                feats.push(f);
            }
            out.push(feats);
        }
        out
    }
}
