//! Words, boundary vectors, and the hyphenated surface form.
//!
//! Every engine predicts the same target: one binary label per letter, where
//! a `1` at position `i` means a syllable break follows letter `i`. The
//! rendered form uses `-` separators, so `be-re-ke-ning` corresponds to the
//! word `berekening` with labels `0101010000`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Per-letter binary break labels. Length always equals the word length.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryVector(Vec<bool>);

impl BoundaryVector {
    pub fn new(labels: Vec<bool>) -> Self {
        Self(labels)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    /// Parse a bit string such as `"0101010000"`.
    pub fn from_bits(bits: &str) -> Result<Self> {
        bits.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::MalformedSyllabification {
                    input: bits.to_string(),
                    reason: format!("invalid label character '{other}'"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn labels(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    /// Number of breaks, i.e. syllable count minus one for non-empty words.
    pub fn break_count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for BoundaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A word rendered with `-` between syllables, e.g. `"be-re-ke-ning"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SyllabifiedString(String);

impl SyllabifiedString {
    /// Validate hyphen placement: no leading, trailing, or doubled `-`.
    pub fn new(s: impl Into<String>) -> Result<Self> {
        let s = s.into();
        let malformed = |reason: &str| Error::MalformedSyllabification {
            input: s.clone(),
            reason: reason.to_string(),
        };
        if s.is_empty() {
            return Err(malformed("empty input"));
        }
        if s.starts_with('-') || s.ends_with('-') {
            return Err(malformed("leading or trailing hyphen"));
        }
        if s.contains("--") {
            return Err(malformed("doubled hyphen"));
        }
        Ok(Self(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn syllables(&self) -> impl Iterator<Item = &str> {
        self.0.split('-')
    }
}

impl fmt::Display for SyllabifiedString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Split a hyphenated form into the bare word and its boundary vector.
///
/// `"be-re-ke-ning"` becomes `("berekening", 0101010000)`.
pub fn encode_boundaries(syllabified: &SyllabifiedString) -> (String, BoundaryVector) {
    let mut word = String::new();
    let mut labels = Vec::new();
    let mut chars = syllabified.as_str().chars().peekable();
    while let Some(c) = chars.next() {
        if c == '-' {
            // validated by SyllabifiedString: never first, last, or doubled
            debug_assert!(!labels.is_empty());
            *labels.last_mut().unwrap() = true;
        } else {
            word.push(c);
            labels.push(false);
        }
    }
    (word, BoundaryVector::new(labels))
}

/// Convenience wrapper: validate and encode in one step.
pub fn encode_boundaries_str(s: &str) -> Result<(String, BoundaryVector)> {
    Ok(encode_boundaries(&SyllabifiedString::new(s)?))
}

/// Render a word with `-` separators at the positions marked in `bounds`.
pub fn decode_boundaries(word: &str, bounds: &BoundaryVector) -> Result<SyllabifiedString> {
    let letters: Vec<char> = word.chars().collect();
    if letters.len() != bounds.len() {
        return Err(Error::LengthMismatch {
            context: "decode_boundaries",
            expected: letters.len(),
            actual: bounds.len(),
        });
    }
    let mut out = String::with_capacity(word.len() + bounds.break_count());
    for (i, &c) in letters.iter().enumerate() {
        out.push(c);
        if bounds.get(i) && i + 1 < letters.len() {
            out.push('-');
        }
    }
    SyllabifiedString::new(out)
}

/// A word with gold boundaries, optionally paired with a phonetic notation
/// (e.g. DISC-style) and its own boundaries. The two channels may differ in
/// length: `proteine` has 8 letters, its notation `prote'jin@` has 10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedWord {
    pub orth: String,
    pub orth_bounds: BoundaryVector,
    pub phon: Option<String>,
    pub phon_bounds: Option<BoundaryVector>,
}

impl AnnotatedWord {
    pub fn new(orth: impl Into<String>, orth_bounds: BoundaryVector) -> Result<Self> {
        Self::with_phon(orth, orth_bounds, None, None)
    }

    pub fn with_phon(
        orth: impl Into<String>,
        orth_bounds: BoundaryVector,
        phon: Option<String>,
        phon_bounds: Option<BoundaryVector>,
    ) -> Result<Self> {
        let orth = orth.into();
        let orth_len = orth.chars().count();
        if orth_len != orth_bounds.len() {
            return Err(Error::LengthMismatch {
                context: "AnnotatedWord orth",
                expected: orth_len,
                actual: orth_bounds.len(),
            });
        }
        if let (Some(p), Some(pb)) = (&phon, &phon_bounds) {
            let p_len = p.chars().count();
            if p_len != pb.len() {
                return Err(Error::LengthMismatch {
                    context: "AnnotatedWord phon",
                    expected: p_len,
                    actual: pb.len(),
                });
            }
        }
        Ok(Self {
            orth,
            orth_bounds,
            phon,
            phon_bounds,
        })
    }

    pub fn letter_count(&self) -> usize {
        self.orth.chars().count()
    }

    pub fn has_phon(&self) -> bool {
        self.phon.is_some() && self.phon_bounds.is_some()
    }
}
