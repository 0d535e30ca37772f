//! Dutch syllabification engines and evaluation tooling.
//!
//! Four engine families predict per-letter syllable breaks: a knowledge-based
//! rule system, interletter weight patterns with a pattern generator, a
//! windowed-feature linear-chain CRF, and a window-CNN/BiLSTM/CRF neural
//! tagger, plus a fusion model that combines pretrained orthographic and
//! phonetic taggers through dot-product attention. The crate also provides
//! corpus handling, the shared evaluation metrics, and a versioned model
//! file format. The `sylbench` binary wraps it all in a CLI.

pub mod alphabet;
pub mod brandt_corstius;
pub mod corpus;
pub mod crf;
pub mod error;
pub mod fusion;
pub mod liang;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod word;

pub use alphabet::Alphabet;
pub use error::{Error, Result};
pub use word::{
    decode_boundaries, encode_boundaries, encode_boundaries_str, AnnotatedWord, BoundaryVector,
    SyllabifiedString,
};
