//! Synthesis of extractive question answering data from raw text, with no
//! question/answer supervision, plus the scoring and baseline answerers used
//! to evaluate it.
//!
//! The generator works in reverse: sample a paragraph, sample an answer span
//! inside it (a noun phrase or a named entity mention), cut the surrounding
//! sentence or sub-clause into a cloze statement with the answer masked, and
//! turn that cloze into a question, either by substituting a wh-word, by
//! perturbing it with a denoising noise function, or by handing it to an
//! external translator process.
//!
//! ```
//! use cloze_forge::corpus::tokenize;
//!
//! let toks = tokenize("Who is Rom?");
//! let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
//! assert_eq!(texts, ["Who", "is", "Rom", "?"]);
//! ```

pub mod answers;
pub mod cloze;
pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod mine;
pub mod plugin;
pub mod seed;
pub mod translate;

pub use answers::{AnswerCategory, AnswerSource, AnswerSpan};
pub use cloze::{Boundary, ClozeQuestion};
pub use corpus::{Document, Paragraph, Sentence, Token};
pub use dataset::{Dataset, GenConfig, QAExample};
pub use translate::{NaturalQuestion, NoiseConfig, TranslationMethod, WhMode, WhWord};
