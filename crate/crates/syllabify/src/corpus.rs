//! Dataset loading, filtering, splitting, and synthetic corpora.
//!
//! The corpus TSV format is one word per line with 2-4 tab-separated
//! columns: `orth<TAB>orth_syllabified[<TAB>phon[<TAB>phon_syllabified]]`.
//! Lines starting with `#` are comments. A compatibility reader accepts
//! plain lists with one hyphenated word per line.
//!
//! Orthography is NFC-normalized and lowercased at ingestion. Phonetic
//! notations are kept verbatim: DISC-style transcriptions use letter case
//! to distinguish phonemes ('N' is the velar nasal, 'E' a short vowel), so
//! lowercasing them would merge distinct symbols.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::word::{encode_boundaries_str, AnnotatedWord, BoundaryVector};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use unicode_normalization::UnicodeNormalization;

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Dictionary,
    Loanword,
    Pseudoword,
    Synthetic,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Dictionary => "dictionary",
            Provenance::Loanword => "loanword",
            Provenance::Pseudoword => "pseudoword",
            Provenance::Synthetic => "synthetic",
        };
        f.write_str(s)
    }
}

/// An immutable collection of annotated words with unique orthographic forms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub provenance: Provenance,
    entries: Vec<AnnotatedWord>,
}

impl Dataset {
    /// Build a dataset, rejecting duplicate orthographic forms.
    pub fn from_entries(
        name: impl Into<String>,
        provenance: Provenance,
        entries: Vec<AnnotatedWord>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.orth.clone()) {
                return Err(Error::DuplicateWord(e.orth.clone()));
            }
        }
        Ok(Self {
            name: name.into(),
            provenance,
            entries,
        })
    }

    pub fn entries(&self) -> &[AnnotatedWord] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AnnotatedWord> {
        self.entries.iter()
    }

    /// Longest orthographic word, in letters.
    pub fn max_word_len(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.letter_count())
            .max()
            .unwrap_or(0)
    }

    /// Entries that carry both channels.
    pub fn paired_entries(&self) -> impl Iterator<Item = &AnnotatedWord> {
        self.entries.iter().filter(|e| e.has_phon())
    }

    /// Canonical TSV serialization (used for hashing and `prepare` output).
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let orth_syll = crate::word::decode_boundaries(&e.orth, &e.orth_bounds)
                .expect("invariant: lengths match");
            out.push_str(&e.orth);
            out.push('\t');
            out.push_str(orth_syll.as_str());
            if let (Some(p), Some(pb)) = (&e.phon, &e.phon_bounds) {
                let phon_syll =
                    crate::word::decode_boundaries(p, pb).expect("invariant: lengths match");
                out.push('\t');
                out.push_str(p);
                out.push('\t');
                out.push_str(phon_syll.as_str());
            }
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the canonical TSV form.
    pub fn content_hash(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.to_tsv().as_bytes());
        h.finalize().into()
    }
}

fn normalize_orth(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

fn parse_channel(
    path: &str,
    line_no: usize,
    given: &str,
    syllabified: &str,
    channel: &str,
) -> Result<(String, BoundaryVector)> {
    let (word, bounds) =
        encode_boundaries_str(syllabified).map_err(|e| Error::Parse {
            path: path.to_string(),
            line: line_no,
            msg: format!("{channel} column: {e}"),
        })?;
    if word != given {
        return Err(Error::Parse {
            path: path.to_string(),
            line: line_no,
            msg: format!(
                "{channel} column '{syllabified}' does not spell '{given}' after removing hyphens"
            ),
        });
    }
    Ok((word, bounds))
}

/// Parse the TSV corpus format into raw entries (duplicates allowed).
pub fn read_entries(path: impl AsRef<Path>) -> Result<Vec<AnnotatedWord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_entries(&text, &path.display().to_string())
}

/// Parse TSV text. Exposed separately so callers can read from memory.
pub fn parse_entries(text: &str, path: &str) -> Result<Vec<AnnotatedWord>> {
    let mut entries = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let entry = match cols.as_slice() {
            [orth, orth_syll] => {
                let orth = normalize_orth(orth);
                let orth_syll = normalize_orth(orth_syll);
                let (word, bounds) = parse_channel(path, line_no, &orth, &orth_syll, "orth")?;
                AnnotatedWord::new(word, bounds)
            }
            [orth, orth_syll, phon] => {
                let orth = normalize_orth(orth);
                let orth_syll = normalize_orth(orth_syll);
                let (word, bounds) = parse_channel(path, line_no, &orth, &orth_syll, "orth")?;
                AnnotatedWord::with_phon(word, bounds, Some((*phon).to_string()), None)
            }
            [orth, orth_syll, phon, phon_syll] => {
                let orth = normalize_orth(orth);
                let orth_syll = normalize_orth(orth_syll);
                let (word, bounds) = parse_channel(path, line_no, &orth, &orth_syll, "orth")?;
                let (phon_word, phon_bounds) =
                    parse_channel(path, line_no, phon, phon_syll, "phon")?;
                AnnotatedWord::with_phon(word, bounds, Some(phon_word), Some(phon_bounds))
            }
            _ => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: line_no,
                    msg: format!("expected 2-4 tab-separated columns, got {}", cols.len()),
                })
            }
        };
        entries.push(entry.map_err(|e| Error::Parse {
            path: path.to_string(),
            line: line_no,
            msg: e.to_string(),
        })?);
    }
    Ok(entries)
}

/// Load a TSV corpus as a dataset, rejecting duplicate forms.
pub fn load_tsv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let entries = read_entries(path)?;
    Dataset::from_entries(
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string()),
        Provenance::Dictionary,
        entries,
    )
}

/// Compatibility reader: one hyphenated word per line ("be-re-ke-ning").
pub fn read_plain_entries(path: impl AsRef<Path>) -> Result<Vec<AnnotatedWord>> {
    let path_s = path.as_ref().display().to_string();
    let text = std::fs::read_to_string(path.as_ref())?;
    let mut entries = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syll = normalize_orth(line);
        let (word, bounds) = encode_boundaries_str(&syll).map_err(|e| Error::Parse {
            path: path_s.clone(),
            line: line_no,
            msg: e.to_string(),
        })?;
        entries.push(AnnotatedWord::new(word, bounds).expect("lengths match by construction"));
    }
    Ok(entries)
}

/// Outcome of ambiguity filtering.
#[derive(Debug, Clone, Default)]
pub struct FilterLog {
    /// Orthographic forms removed because they had multiple solutions.
    pub ambiguous: Vec<String>,
    /// Count of exact-duplicate entries that were collapsed.
    pub duplicates_collapsed: usize,
}

/// Remove every word that appears with two or more distinct boundary
/// solutions; collapse consistent duplicates to one entry.
///
/// Idempotent: running it on its own output changes nothing.
pub fn remove_ambiguous(
    name: impl Into<String>,
    provenance: Provenance,
    raw: Vec<AnnotatedWord>,
) -> Result<(Dataset, FilterLog)> {
    let mut groups: BTreeMap<String, Vec<AnnotatedWord>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for e in raw {
        let slot = groups.entry(e.orth.clone()).or_default();
        if slot.is_empty() {
            order.push(e.orth.clone());
        }
        slot.push(e);
    }
    let mut log = FilterLog::default();
    let mut kept = Vec::new();
    for orth in order {
        let group = &groups[&orth];
        let mut solutions: Vec<&BoundaryVector> = Vec::new();
        for e in group {
            if !solutions.contains(&&e.orth_bounds) {
                solutions.push(&e.orth_bounds);
            }
        }
        if solutions.len() > 1 {
            log.ambiguous.push(orth);
        } else {
            log.duplicates_collapsed += group.len() - 1;
            kept.push(group[0].clone());
        }
    }
    let ds = Dataset::from_entries(name, provenance, kept)?;
    Ok((ds, log))
}

/// Parameters for seeded train/test splits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub fold_count: usize,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64, fold_count: usize) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train_fraction must be in (0,1), got {train_fraction}"
            )));
        }
        if fold_count == 0 {
            return Err(Error::InvalidConfig("fold_count must be >= 1".into()));
        }
        Ok(Self {
            train_fraction,
            seed,
            fold_count,
        })
    }
}

/// Produce `fold_count` independent shuffled train/test partitions.
/// Fold `k` shuffles with seed `spec.seed + k`, so folds use consecutive
/// seeds and any fold can be regenerated in isolation.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<Vec<(Dataset, Dataset)>> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset(ds.name.clone()));
    }
    let n = ds.len();
    let train_n = ((n as f64) * spec.train_fraction).round() as usize;
    let train_n = train_n.clamp(1, n - 1);
    let mut folds = Vec::with_capacity(spec.fold_count);
    for k in 0..spec.fold_count {
        let mut indices: Vec<usize> = (0..n).collect();
        SplitMix64::new(spec.seed + k as u64).shuffle(&mut indices);
        let mut train = Vec::with_capacity(train_n);
        let mut test = Vec::with_capacity(n - train_n);
        for (pos, &i) in indices.iter().enumerate() {
            if pos < train_n {
                train.push(ds.entries[i].clone());
            } else {
                test.push(ds.entries[i].clone());
            }
        }
        folds.push((
            Dataset::from_entries(
                format!("{}-fold{}-train", ds.name, k),
                ds.provenance,
                train,
            )?,
            Dataset::from_entries(format!("{}-fold{}-test", ds.name, k), ds.provenance, test)?,
        ));
    }
    Ok(folds)
}

const SYN_VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];
const SYN_CONSONANTS: &[char] = &[
    'b', 'd', 'f', 'g', 'h', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'w', 'z',
];

fn is_syn_vowel(c: char) -> bool {
    SYN_VOWELS.contains(&c)
}

/// Gold rule for the `cv` corpus: a break follows letter `i` exactly when
/// `i` is a vowel and the next two letters are a consonant-vowel pair.
pub fn cv_rule_bounds(word: &str) -> BoundaryVector {
    let letters: Vec<char> = word.chars().collect();
    let mut labels = vec![false; letters.len()];
    for i in 0..letters.len() {
        if i + 2 < letters.len()
            && is_syn_vowel(letters[i])
            && !is_syn_vowel(letters[i + 1])
            && is_syn_vowel(letters[i + 2])
        {
            labels[i] = true;
        }
    }
    BoundaryVector::new(labels)
}

fn gen_cv_word(rng: &mut SplitMix64) -> String {
    let syllables = 2 + rng.next_below(3) as usize;
    let mut word = String::new();
    for s in 0..syllables {
        if s == 0 && rng.next_f64() < 0.15 {
            word.push(*rng.choose(SYN_VOWELS));
            continue;
        }
        word.push(*rng.choose(SYN_CONSONANTS));
        word.push(*rng.choose(SYN_VOWELS));
        // occasional coda so the rule has V|CC contexts to reject
        if rng.next_f64() < 0.25 {
            word.push(*rng.choose(SYN_CONSONANTS));
        }
    }
    word
}

/// One syllable of the ambiguous paired corpus.
enum AmbigSyllable {
    Plain(char, char),
    /// Orthographic "eu" read as one vowel; phonetic rewrite is "y".
    Mono(char),
    /// Orthographic "eu" read as two syllables; phonetic form keeps "eu".
    Hiatus(char),
}

fn gen_ambig_word(rng: &mut SplitMix64) -> (Vec<String>, Vec<String>) {
    let syllables = 2 + rng.next_below(3) as usize;
    let mut orth_sylls: Vec<String> = Vec::new();
    let mut phon_sylls: Vec<String> = Vec::new();
    for _ in 0..syllables {
        let c = *rng.choose(SYN_CONSONANTS);
        let kind = if rng.next_f64() < 0.4 {
            if rng.next_f64() < 0.5 {
                AmbigSyllable::Mono(c)
            } else {
                AmbigSyllable::Hiatus(c)
            }
        } else {
            AmbigSyllable::Plain(c, *rng.choose(SYN_VOWELS))
        };
        match kind {
            AmbigSyllable::Plain(c, v) => {
                orth_sylls.push(format!("{c}{v}"));
                phon_sylls.push(format!("{c}{v}"));
            }
            AmbigSyllable::Mono(c) => {
                orth_sylls.push(format!("{c}eu"));
                phon_sylls.push(format!("{c}y"));
            }
            AmbigSyllable::Hiatus(c) => {
                // two syllables: C+"e" then bare "u", in both channels
                orth_sylls.push(format!("{c}e"));
                orth_sylls.push("u".to_string());
                phon_sylls.push(format!("{c}e"));
                phon_sylls.push("u".to_string());
            }
        }
    }
    (orth_sylls, phon_sylls)
}

fn bounds_from_syllables(sylls: &[String]) -> (String, BoundaryVector) {
    let word: String = sylls.concat();
    let mut labels = vec![false; word.chars().count()];
    let mut pos = 0usize;
    for (i, s) in sylls.iter().enumerate() {
        pos += s.chars().count();
        if i + 1 < sylls.len() {
            labels[pos - 1] = true;
        }
    }
    (word, BoundaryVector::new(labels))
}

/// Generate a reproducible synthetic dataset.
///
/// Rules:
/// - `"cv"`: pronounceable pseudo-words whose gold boundaries come from
///   [`cv_rule_bounds`]; orthographic channel only.
/// - `"cv-ambig"`: paired corpus where the digraph "eu" is read either as
///   one vowel or as a hiatus, chosen per word. The orthographic surface is
///   identical for both readings while the injective phonetic rewrite
///   ("eu" as one vowel becomes "y") keeps the phonetic channel
///   unambiguous. Built for fusion experiments.
pub fn gen_synthetic(rule: &str, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("gen_synthetic needs n > 0".into()));
    }
    match rule {
        "cv" | "cv-ambig" => {}
        other => return Err(Error::RuleUnknown(other.to_string())),
    }
    let mut rng = SplitMix64::new(seed);
    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(n);
    while entries.len() < n {
        let entry = if rule == "cv" {
            let word = gen_cv_word(&mut rng);
            if !seen.insert(word.clone()) {
                continue;
            }
            let bounds = cv_rule_bounds(&word);
            AnnotatedWord::new(word, bounds).expect("lengths match")
        } else {
            let (orth_sylls, phon_sylls) = gen_ambig_word(&mut rng);
            let (orth, orth_bounds) = bounds_from_syllables(&orth_sylls);
            if !seen.insert(orth.clone()) {
                continue;
            }
            let (phon, phon_bounds) = bounds_from_syllables(&phon_sylls);
            AnnotatedWord::with_phon(orth, orth_bounds, Some(phon), Some(phon_bounds))
                .expect("lengths match")
        };
        entries.push(entry);
    }
    Dataset::from_entries(format!("synthetic-{rule}-{n}-{seed}"), Provenance::Synthetic, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_two_and_four_columns() {
        let text = "# comment\nberekening\tbe-re-ke-ning\nproteine\tpro-te-i-ne\tprote'jin@\tpro-te'-ji-n@\n";
        let entries = parse_entries(text, "mem").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].orth, "berekening");
        assert_eq!(entries[0].orth_bounds.to_string(), "0101010000");
        assert!(entries[0].phon.is_none());
        assert_eq!(entries[1].orth, "proteine");
        assert_eq!(entries[1].phon.as_deref(), Some("prote'jin@"));
        assert!(entries[1].has_phon());
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let entries = parse_entries("", "mem").unwrap();
        assert!(entries.is_empty());
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "goed\tgoed\nfout\tf-out-\n";
        match parse_entries(text, "mem") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_columns_rejected() {
        let text = "kat\tka-t\textra\tmore\ttoomany\n";
        assert!(parse_entries(text, "mem").is_err());
        let text = "kat\tkat-x\n";
        assert!(parse_entries(text, "mem").is_err());
    }

    #[test]
    fn ingestion_lowercases_orth_but_not_phon() {
        let text = "Kat\tKat\nleptosoom\tlep-to-soom\tlEpto'som\tlEp-to-'som\n";
        let entries = parse_entries(text, "mem").unwrap();
        assert_eq!(entries[0].orth, "kat");
        assert_eq!(entries[1].phon.as_deref(), Some("lEpto'som"));
    }

    #[test]
    fn ambiguous_forms_removed() {
        let zoeven_a = encode_boundaries_str("zoe-ven").unwrap();
        let zoeven_b = encode_boundaries_str("zo-e-ven").unwrap();
        let raw = vec![
            AnnotatedWord::new("zoeven", zoeven_a.1).unwrap(),
            AnnotatedWord::new("zoeven", zoeven_b.1).unwrap(),
            AnnotatedWord::new("kat", BoundaryVector::from_bits("000").unwrap()).unwrap(),
        ];
        let (ds, log) = remove_ambiguous("t", Provenance::Pseudoword, raw).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(log.ambiguous, vec!["zoeven".to_string()]);
    }

    #[test]
    fn pseudoword_scale_example() {
        // 120 entries where 21 distinct forms are ambiguous -> 99 retained
        let mut raw = Vec::new();
        for i in 0..99 {
            let w = format!("b{}", "a".repeat(i + 1));
            let bounds = BoundaryVector::zeros(w.chars().count());
            raw.push(AnnotatedWord::new(w, bounds).unwrap());
        }
        for i in 0..21 {
            let w = format!("k{}t", "o".repeat(i + 2));
            let n = w.chars().count();
            let mut one = vec![false; n];
            one[0] = true;
            raw.push(AnnotatedWord::new(w.clone(), BoundaryVector::zeros(n)).unwrap());
            raw.push(AnnotatedWord::new(w, BoundaryVector::new(one)).unwrap());
        }
        let (ds, log) = remove_ambiguous("pseudo", Provenance::Pseudoword, raw).unwrap();
        assert_eq!(ds.len(), 99);
        assert_eq!(log.ambiguous.len(), 21);
    }

    #[test]
    fn remove_ambiguous_idempotent_and_noop_on_clean() {
        let raw = vec![
            AnnotatedWord::new("ab", BoundaryVector::from_bits("10").unwrap()).unwrap(),
            AnnotatedWord::new("cd", BoundaryVector::from_bits("00").unwrap()).unwrap(),
        ];
        let (ds, log) = remove_ambiguous("t", Provenance::Synthetic, raw.clone()).unwrap();
        assert_eq!(ds.entries(), raw.as_slice());
        assert!(log.ambiguous.is_empty());
        let (ds2, log2) =
            remove_ambiguous("t", Provenance::Synthetic, ds.entries().to_vec()).unwrap();
        assert_eq!(ds2.entries(), ds.entries());
        assert!(log2.ambiguous.is_empty());
        assert_eq!(log2.duplicates_collapsed, 0);
    }

    fn small_dataset(n: usize) -> Dataset {
        let entries = (0..n)
            .map(|i| {
                let w = format!("w{i:04}");
                let bounds = BoundaryVector::zeros(w.chars().count());
                AnnotatedWord::new(w, bounds).unwrap()
            })
            .collect();
        Dataset::from_entries("small", Provenance::Synthetic, entries).unwrap()
    }

    #[test]
    fn split_exact_fraction() {
        let ds = small_dataset(100);
        let spec = SplitSpec::new(0.9, 11, 1).unwrap();
        let folds = split(&ds, &spec).unwrap();
        assert_eq!(folds.len(), 1);
        assert_eq!(folds[0].0.len(), 90);
        assert_eq!(folds[0].1.len(), 10);
    }

    #[test]
    fn split_deterministic_and_partition() {
        let ds = small_dataset(53);
        let spec = SplitSpec::new(0.9, 7, 3).unwrap();
        let a = split(&ds, &spec).unwrap();
        let b = split(&ds, &spec).unwrap();
        for ((ta, ea), (tb, eb)) in a.iter().zip(b.iter()) {
            assert_eq!(ta.entries(), tb.entries());
            assert_eq!(ea.entries(), eb.entries());
        }
        for (train, test) in &a {
            let train_set: HashSet<_> = train.iter().map(|e| e.orth.clone()).collect();
            let test_set: HashSet<_> = test.iter().map(|e| e.orth.clone()).collect();
            assert!(train_set.is_disjoint(&test_set));
            assert_eq!(train_set.len() + test_set.len(), ds.len());
        }
    }

    #[test]
    fn fold_k_uses_consecutive_seed() {
        let ds = small_dataset(40);
        let many = split(&ds, &SplitSpec::new(0.8, 5, 3).unwrap()).unwrap();
        let third = split(&ds, &SplitSpec::new(0.8, 7, 1).unwrap()).unwrap();
        assert_eq!(many[2].0.entries(), third[0].0.entries());
        assert_eq!(many[2].1.entries(), third[0].1.entries());
    }

    #[test]
    fn table2_scale_split_sizes() {
        // 293,714 words at 0.9 -> 264,343 / 29,371 (checked arithmetically)
        let n = 293_714u64;
        let train = ((n as f64) * 0.9).round() as u64;
        assert_eq!(train, 264_343);
        assert_eq!(n - train, 29_371);
    }

    #[test]
    fn cv_rule_examples() {
        assert_eq!(cv_rule_bounds("bakote").to_string(), "010100"); // ba-ko-te
        assert_eq!(cv_rule_bounds("bakto").to_string(), "00000"); // V|CC left intact
        assert_eq!(cv_rule_bounds("abako").to_string(), "10100"); // a-ba-ko
    }

    #[test]
    fn synthetic_reproducible_and_unique() {
        let a = gen_synthetic("cv", 200, 9).unwrap();
        let b = gen_synthetic("cv", 200, 9).unwrap();
        assert_eq!(a.entries(), b.entries());
        let forms: HashSet<_> = a.iter().map(|e| e.orth.clone()).collect();
        assert_eq!(forms.len(), 200);
        for e in a.iter() {
            assert_eq!(e.orth_bounds, cv_rule_bounds(&e.orth));
        }
    }

    #[test]
    fn synthetic_rejects_bad_args() {
        assert!(matches!(
            gen_synthetic("cv", 0, 1),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            gen_synthetic("nope", 5, 1),
            Err(Error::RuleUnknown(_))
        ));
    }

    #[test]
    fn ambig_rule_pairs_channels() {
        let ds = gen_synthetic("cv-ambig", 300, 3).unwrap();
        let mut saw_mono = false;
        let mut saw_hiatus = false;
        for e in ds.iter() {
            assert!(e.has_phon());
            let phon = e.phon.as_deref().unwrap();
            if phon.contains('y') {
                saw_mono = true;
                // "eu" in orth, one vowel: orth longer than phon by 1 per mono digraph
                assert!(e.orth.contains("eu"));
            }
            if e.orth.contains("eu") && !phon.contains('y') {
                saw_hiatus = true;
            }
        }
        assert!(saw_mono && saw_hiatus);
    }

    #[test]
    fn tsv_roundtrip() {
        let ds = gen_synthetic("cv-ambig", 50, 5).unwrap();
        let text = ds.to_tsv();
        let entries = parse_entries(&text, "mem").unwrap();
        assert_eq!(entries, ds.entries());
    }
}
