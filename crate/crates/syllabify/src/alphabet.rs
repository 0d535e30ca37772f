//! Character inventory with reserved sentinel ids.

use std::collections::HashMap;

/// Dense symbol table over unicode scalar values.
///
/// Ids `0..4` are reserved for PAD, WORD_START, WORD_END, and UNK; real
/// symbols follow in sorted order, so the same corpus always yields the
/// same table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<char>,
    index: HashMap<char, usize>,
}

impl Alphabet {
    pub const PAD: usize = 0;
    pub const WORD_START: usize = 1;
    pub const WORD_END: usize = 2;
    pub const UNK: usize = 3;
    pub const RESERVED: usize = 4;

    /// Build from the distinct characters of an iterator of words.
    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut symbols: Vec<char> = words
            .into_iter()
            .flat_map(|w| w.chars())
            .collect::<std::collections::BTreeSet<char>>()
            .into_iter()
            .collect();
        symbols.sort_unstable();
        Self::from_symbols(symbols)
    }

    pub fn from_symbols(symbols: Vec<char>) -> Self {
        let index = symbols
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, Self::RESERVED + i))
            .collect();
        Self { symbols, index }
    }

    /// Total id count including the reserved ids.
    pub fn len(&self) -> usize {
        Self::RESERVED + self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Id for a symbol, or UNK when the symbol is not in the inventory.
    pub fn lookup(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(Self::UNK)
    }

    /// The symbol for a real (non-reserved) id.
    pub fn symbol(&self, id: usize) -> Option<char> {
        id.checked_sub(Self::RESERVED)
            .and_then(|i| self.symbols.get(i).copied())
    }

    /// Real symbols in id order.
    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }
}
