//! Knowledge-based Dutch syllabifier.
//!
//! The word is first compressed into vowel and consonant clusters, with
//! common vowel combinations (eu, au, ieu, ...) kept as single units:
//! `loonbrief` becomes `[l][oo][n][b][r][ie][f]`. Each vowel cluster anchors
//! one syllable. The consonant run between two vowel clusters is then split
//! by the maximum onset principle: the longest run suffix that is a valid
//! word-initial onset joins the following syllable. Consonant-priority
//! patterns from the table file override onset maximization where it is
//! known to fail, mostly at compound seams.
//!
//! Everything is table-driven; the bundled Dutch tables are a data file and
//! can be replaced without recompiling.

use crate::error::{Error, Result};
use crate::word::BoundaryVector;
use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

/// Vowel inventory: single vowel letters and multigraphs, longest-first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterTable {
    vowels: HashSet<char>,
    /// Multigraphs sorted by descending length, then lexicographically.
    multigraphs: Vec<Vec<char>>,
}

impl ClusterTable {
    pub fn new(entries: Vec<String>) -> Result<Self> {
        let mut vowels = HashSet::new();
        let mut multigraphs = Vec::new();
        for e in &entries {
            let chars: Vec<char> = e.chars().collect();
            match chars.len() {
                0 => {
                    return Err(Error::InvalidConfig(
                        "empty vowel_clusters entry".to_string(),
                    ))
                }
                1 => {
                    vowels.insert(chars[0]);
                }
                _ => multigraphs.push(chars),
            }
        }
        for mg in &multigraphs {
            if !mg.iter().all(|c| vowels.contains(c)) {
                return Err(Error::InvalidConfig(format!(
                    "multigraph '{}' contains a letter not listed as a vowel",
                    mg.iter().collect::<String>()
                )));
            }
        }
        multigraphs.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        Ok(Self {
            vowels,
            multigraphs,
        })
    }

    pub fn is_vowel(&self, c: char) -> bool {
        self.vowels.contains(&c)
    }

    /// Longest multigraph starting at `pos`, if any.
    fn match_at(&self, letters: &[char], pos: usize) -> Option<usize> {
        self.multigraphs
            .iter()
            .find(|mg| letters[pos..].starts_with(mg))
            .map(|mg| mg.len())
    }
}

/// Consonant sequences permitted to start a syllable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnsetTable {
    onsets: HashSet<String>,
    max_len: usize,
}

impl OnsetTable {
    pub fn new(entries: Vec<String>) -> Result<Self> {
        if entries.iter().any(|e| e.is_empty()) {
            return Err(Error::InvalidConfig("empty onsets entry".to_string()));
        }
        let max_len = entries.iter().map(|e| e.chars().count()).max().unwrap_or(1);
        Ok(Self {
            onsets: entries.into_iter().collect(),
            max_len: max_len.max(1),
        })
    }

    /// Single consonants are always valid onsets.
    pub fn is_valid(&self, run: &[char]) -> bool {
        run.len() == 1 || self.onsets.contains(&run.iter().collect::<String>())
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }
}

/// A consonant-priority pattern: letters with inter-letter digits.
/// Odd digit forces a break at that slot, even digit forbids one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityPattern {
    letters: Vec<char>,
    digits: Vec<u8>,
}

impl PriorityPattern {
    pub fn parse(token: &str) -> Result<Self> {
        let mut letters = Vec::new();
        let mut digits = vec![0u8];
        for c in token.chars() {
            if let Some(d) = c.to_digit(10) {
                let last = digits.last_mut().unwrap();
                if *last != 0 {
                    return Err(Error::InvalidConfig(format!(
                        "priority pattern '{token}' has two digits in one slot"
                    )));
                }
                *last = d as u8;
            } else {
                letters.push(c);
                digits.push(0);
            }
        }
        if letters.is_empty() || digits.iter().all(|&d| d == 0) {
            return Err(Error::InvalidConfig(format!(
                "priority pattern '{token}' needs letters and at least one digit"
            )));
        }
        Ok(Self { letters, digits })
    }
}

/// The full rule inventory loaded from one table file.
#[derive(Debug, Clone, PartialEq)]
pub struct BcTables {
    pub clusters: ClusterTable,
    pub onsets: OnsetTable,
    pub priority: Vec<PriorityPattern>,
}

const DEFAULT_TABLES: &str = include_str!("../data/nl_tables.txt");

impl BcTables {
    /// The bundled Dutch tables.
    pub fn default_dutch() -> &'static BcTables {
        static TABLES: OnceLock<BcTables> = OnceLock::new();
        TABLES.get_or_init(|| {
            BcTables::parse(DEFAULT_TABLES).expect("bundled tables are valid")
        })
    }

    /// Parse the sectioned table format: `[vowel_clusters]`, `[onsets]`,
    /// optional `[priority]`, one entry per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut vowel_entries = Vec::new();
        let mut onset_entries = Vec::new();
        let mut priority = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].to_string();
                continue;
            }
            match section.as_str() {
                "vowel_clusters" => vowel_entries.push(line.to_string()),
                "onsets" => onset_entries.push(line.to_string()),
                "priority" => priority.push(PriorityPattern::parse(line)?),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "entry '{line}' outside a known section (in '[{other}]')"
                    )))
                }
            }
        }
        Ok(Self {
            clusters: ClusterTable::new(vowel_entries)?,
            onsets: OnsetTable::new(onset_entries)?,
            priority,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterKind {
    Vowel,
    Consonant,
}

/// One cluster of the compressed word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub text: String,
    pub kind: ClusterKind,
    /// Letter index of the first letter of this cluster.
    pub start: usize,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    /// Letter index of the last letter of this cluster.
    pub fn end(&self) -> usize {
        self.start + self.len() - 1
    }
}

/// Compress a word into vowel and consonant clusters. Vowel multigraphs are
/// matched greedily, longest first; consonants and unknown symbols become
/// single-letter clusters.
pub fn compress(word: &str, table: &ClusterTable) -> Vec<Cluster> {
    let letters: Vec<char> = word.chars().collect();
    let mut clusters = Vec::new();
    let mut pos = 0;
    while pos < letters.len() {
        if table.is_vowel(letters[pos]) {
            let len = table.match_at(&letters, pos).unwrap_or(1);
            clusters.push(Cluster {
                text: letters[pos..pos + len].iter().collect(),
                kind: ClusterKind::Vowel,
                start: pos,
            });
            pos += len;
        } else {
            clusters.push(Cluster {
                text: letters[pos].to_string(),
                kind: ClusterKind::Consonant,
                start: pos,
            });
            pos += 1;
        }
    }
    clusters
}

/// Collect priority-pattern decisions for a word: gap index (break after
/// letter `gap-1`) mapped to the strongest digit that applies there.
fn priority_digits(letters: &[char], patterns: &[PriorityPattern]) -> Vec<u8> {
    let mut digits = vec![0u8; letters.len() + 1];
    for p in patterns {
        if p.letters.len() > letters.len() {
            continue;
        }
        for start in 0..=letters.len() - p.letters.len() {
            if letters[start..start + p.letters.len()] == p.letters[..] {
                for (k, &d) in p.digits.iter().enumerate() {
                    let gap = start + k;
                    digits[gap] = digits[gap].max(d);
                }
            }
        }
    }
    digits
}

/// Syllabify by cluster compression, priority patterns, and maximum onset.
pub fn syllabify_bc(word: &str, tables: &BcTables) -> BoundaryVector {
    let letters: Vec<char> = word.chars().collect();
    let mut labels = vec![false; letters.len()];
    let clusters = compress(word, &tables.clusters);
    let vowel_idx: Vec<usize> = clusters
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == ClusterKind::Vowel)
        .map(|(i, _)| i)
        .collect();
    if vowel_idx.len() < 2 {
        return BoundaryVector::new(labels);
    }
    let priority = priority_digits(&letters, &tables.priority);

    for pair in vowel_idx.windows(2) {
        let (left_v, right_v) = (&clusters[pair[0]], &clusters[pair[1]]);
        let run: Vec<char> = clusters[pair[0] + 1..pair[1]]
            .iter()
            .flat_map(|c| c.text.chars())
            .collect();
        // Candidate gaps: after the left vowel cluster, and after each
        // consonant of the run. Gap g means a break after letter g-1.
        let first_gap = left_v.end() + 1;
        let last_gap = right_v.start;
        let forced = (first_gap..=last_gap)
            .find(|&g| priority[g] % 2 == 1 && priority[g] > 0);
        let gap = if let Some(g) = forced {
            g
        } else if run.is_empty() {
            // adjacent vowel clusters split between them
            first_gap
        } else {
            // longest run suffix that is a valid onset joins the right side
            let max_take = run.len().min(tables.onsets.max_len());
            let take = (1..=max_take)
                .rev()
                .find(|&s| {
                    let candidate = last_gap - s;
                    let inhibited = priority[candidate] > 0 && priority[candidate] % 2 == 0;
                    tables.onsets.is_valid(&run[run.len() - s..]) && !inhibited
                })
                .unwrap_or(0);
            last_gap - take
        };
        if gap > 0 && gap < letters.len() {
            labels[gap - 1] = true;
        }
    }
    BoundaryVector::new(labels)
}
