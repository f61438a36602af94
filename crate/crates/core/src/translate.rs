//! Cloze to question translation: identity substitution, the noisy-cloze
//! procedure, and the bridge to an external translator plug-in. Also the
//! wh-word heuristic and the category-token prefix used when exporting
//! question corpora for translator training.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answers::AnswerCategory;
use crate::cloze::ClozeQuestion;
use crate::plugin::{PluginError, PluginTranslator, TranslateRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WhWord {
    Who,
    What,
    Where,
    When,
    #[serde(rename = "How much")]
    HowMuch,
    #[serde(rename = "How many")]
    HowMany,
}

impl WhWord {
    pub const ALL: [WhWord; 6] = [
        Self::Who,
        Self::What,
        Self::Where,
        Self::When,
        Self::HowMuch,
        Self::HowMany,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Who => "Who",
            Self::What => "What",
            Self::Where => "Where",
            Self::When => "When",
            Self::HowMuch => "How much",
            Self::HowMany => "How many",
        }
    }

    /// Number of whitespace tokens in the surface form.
    pub fn token_count(self) -> usize {
        match self {
            Self::HowMuch | Self::HowMany => 2,
            _ => 1,
        }
    }

    /// The wh-word a line starts with, case-insensitively, on a word
    /// boundary ("Whatever" does not start with "what").
    pub fn from_prefix(line: &str) -> Option<WhWord> {
        let lower = line.trim_start().to_lowercase();
        // two-word forms first so "how much" is not mistaken for anything shorter
        [
            Self::HowMuch,
            Self::HowMany,
            Self::What,
            Self::When,
            Self::Where,
            Self::Who,
        ]
        .into_iter()
        .find(|wh| {
            let word = wh.as_str().to_lowercase();
            lower.starts_with(&word)
                && !lower[word.len()..]
                    .chars()
                    .next()
                    .is_some_and(char::is_alphanumeric)
        })
    }

    /// Category whose heuristic wh-word this is.
    pub fn category(self) -> AnswerCategory {
        match self {
            Self::Who => AnswerCategory::PersonNorpOrg,
            Self::Where => AnswerCategory::Place,
            Self::What => AnswerCategory::Thing,
            Self::When => AnswerCategory::Temporal,
            Self::HowMuch | Self::HowMany => AnswerCategory::Numeric,
        }
    }
}

impl fmt::Display for WhWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum WhMode {
    Heuristic,
    Random,
}

impl FromStr for WhMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "HEURISTIC" => Ok(Self::Heuristic),
            "RANDOM" => Ok(Self::Random),
            _ => Err(format!(
                "unknown wh mode {s:?} (expected heuristic or random)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TranslationMethod {
    Identity,
    Noisy,
    External,
}

impl TranslationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Identity => "IDENTITY",
            Self::Noisy => "NOISY",
            Self::External => "EXTERNAL",
        }
    }
}

impl FromStr for TranslationMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "IDENTITY" => Ok(Self::Identity),
            "NOISY" => Ok(Self::Noisy),
            "EXTERNAL" => Ok(Self::External),
            _ => Err(format!(
                "unknown translation method {s:?} (expected identity, noisy or external)"
            )),
        }
    }
}

/// Word dropout, bounded local permutation and word masking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub p_drop: f64,
    pub shuffle_k: usize,
    pub p_mask: f64,
    pub mask_placeholder: String,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            p_drop: 0.1,
            shuffle_k: 3,
            p_mask: 0.1,
            mask_placeholder: "_".to_string(),
        }
    }
}

impl NoiseConfig {
    pub fn new(p_drop: f64, shuffle_k: usize, p_mask: f64) -> Self {
        Self {
            p_drop,
            shuffle_k,
            p_mask,
            ..Self::default()
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0, 0.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [("p_drop", self.p_drop), ("p_mask", self.p_mask)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }
}

/// Where a question came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeRef {
    pub doc_id: String,
    pub para_index: usize,
    pub answer_start: usize,
    pub answer_end: usize,
}

impl ClozeRef {
    fn of(cloze: &ClozeQuestion) -> Self {
        Self {
            doc_id: cloze.doc_id.clone(),
            para_index: cloze.para_index,
            answer_start: cloze.answer.char_start,
            answer_end: cloze.answer.char_end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalQuestion {
    pub text: String,
    pub wh_word: WhWord,
    pub method: TranslationMethod,
    pub source_cloze: ClozeRef,
}

/// Pick a wh-word for an answer category. Generic answers always fall back
/// to a uniform draw.
pub fn wh_for_category<R: Rng + ?Sized>(
    category: AnswerCategory,
    mode: WhMode,
    rng: &mut R,
) -> WhWord {
    use AnswerCategory::*;
    match (mode, category) {
        (WhMode::Heuristic, PersonNorpOrg) => WhWord::Who,
        (WhMode::Heuristic, Place) => WhWord::Where,
        (WhMode::Heuristic, Thing) => WhWord::What,
        (WhMode::Heuristic, Temporal) => WhWord::When,
        (WhMode::Heuristic, Numeric) => {
            if rng.gen_bool(0.5) {
                WhWord::HowMuch
            } else {
                WhWord::HowMany
            }
        }
        (WhMode::Random, _) | (WhMode::Heuristic, Generic) => {
            WhWord::ALL[rng.gen_range(0..WhWord::ALL.len())]
        }
    }
}

/// Replace the mask with a wh-word in place and append "?".
pub fn identity_translate<R: Rng + ?Sized>(
    cloze: &ClozeQuestion,
    mode: WhMode,
    rng: &mut R,
) -> NaturalQuestion {
    let wh = wh_for_category(cloze.category(), mode, rng);
    identity_with_wh(cloze, wh)
}

/// Identity translation with a fixed wh-word.
pub fn identity_with_wh(cloze: &ClozeQuestion, wh: WhWord) -> NaturalQuestion {
    let mut parts: Vec<&str> = cloze.tokens.iter().map(String::as_str).collect();
    parts[cloze.mask_index] = wh.as_str();
    parts.push("?");
    NaturalQuestion {
        text: parts.join(" "),
        wh_word: wh,
        method: TranslationMethod::Identity,
        source_cloze: ClozeRef::of(cloze),
    }
}

/// A token surviving the noise function: its index in the input and
/// whether it was replaced by the placeholder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoisedToken {
    pub index: usize,
    pub masked: bool,
}

/// Run dropout, then a bounded shuffle, then masking over `n` tokens.
///
/// The shuffle gives survivor `i` the key `i + u` with `u` uniform on
/// `[0, k]` and stable-sorts by key, so no token moves more than `k`
/// positions from where dropout left it.
pub fn apply_noise<R: Rng + ?Sized>(n: usize, cfg: &NoiseConfig, rng: &mut R) -> Vec<NoisedToken> {
    let survivors: Vec<usize> = (0..n)
        .filter(|_| !(cfg.p_drop > 0.0 && rng.gen_bool(cfg.p_drop)))
        .collect();
    let mut order: Vec<(f64, usize)> = survivors
        .iter()
        .enumerate()
        .map(|(pos, &idx)| {
            let u = if cfg.shuffle_k == 0 {
                0.0
            } else {
                rng.gen_range(0.0..=cfg.shuffle_k as f64)
            };
            (pos as f64 + u, idx)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    order
        .into_iter()
        .map(|(_, index)| NoisedToken {
            index,
            masked: cfg.p_mask > 0.0 && rng.gen_bool(cfg.p_mask),
        })
        .collect()
}

/// Delete the mask, perturb, prepend a wh-word and append "?".
pub fn noisy_translate<R: Rng + ?Sized>(
    cloze: &ClozeQuestion,
    cfg: &NoiseConfig,
    mode: WhMode,
    rng: &mut R,
) -> NaturalQuestion {
    let words: Vec<&str> = cloze
        .tokens
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != cloze.mask_index)
        .map(|(_, t)| t.as_str())
        .collect();
    let noised = apply_noise(words.len(), cfg, rng);
    let wh = wh_for_category(cloze.category(), mode, rng);
    let mut parts = Vec::with_capacity(noised.len() + 2);
    parts.push(wh.as_str());
    parts.extend(noised.iter().map(|t| {
        if t.masked {
            cfg.mask_placeholder.as_str()
        } else {
            words[t.index]
        }
    }));
    parts.push("?");
    NaturalQuestion {
        text: parts.join(" "),
        wh_word: wh,
        method: TranslationMethod::Noisy,
        source_cloze: ClozeRef::of(cloze),
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExternalTranslation {
    pub questions: Vec<NaturalQuestion>,
    /// Log-likelihoods reported by the plug-in, when it sends them.
    pub scores: Vec<Option<f64>>,
    /// Outputs that needed a "?" appended.
    pub repaired: usize,
}

/// Translate a batch through a translator plug-in, preserving order.
///
/// The wh-word is read from the start of the returned question; when the
/// plug-in did not start with one, the heuristic choice for the category is
/// recorded (`What` for generic answers) and the text is left as returned.
pub fn external_translate(
    clozes: &[ClozeQuestion],
    translator: &mut PluginTranslator,
) -> Result<ExternalTranslation, PluginError> {
    let requests: Vec<TranslateRequest> = clozes
        .iter()
        .enumerate()
        .map(|(i, c)| TranslateRequest {
            id: i.to_string(),
            cloze: c.text(),
            category: c.category().as_str().to_string(),
            question: None,
        })
        .collect();
    let responses = translator.request(&requests)?;
    let mut out = ExternalTranslation::default();
    for (resp, cloze) in responses.into_iter().zip(clozes) {
        let mut text = resp.question.trim().to_string();
        if !text.ends_with('?') {
            if !text.is_empty() {
                text.push(' ');
            }
            text.push('?');
            out.repaired += 1;
        }
        let wh_word = WhWord::from_prefix(&text).unwrap_or(match cloze.category() {
            AnswerCategory::PersonNorpOrg => WhWord::Who,
            AnswerCategory::Place => WhWord::Where,
            AnswerCategory::Temporal => WhWord::When,
            AnswerCategory::Numeric => WhWord::HowMany,
            AnswerCategory::Thing | AnswerCategory::Generic => WhWord::What,
        });
        out.questions.push(NaturalQuestion {
            text,
            wh_word,
            method: TranslationMethod::External,
            source_cloze: ClozeRef::of(cloze),
        });
        out.scores.push(resp.score);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("question does not start with the wh-word for {category}")]
pub struct CategoryMismatch {
    pub category: AnswerCategory,
}

/// Prefix a question with its answer category token, e.g.
/// `"PLACE Where is Mount Vesuvius ?"`.
pub fn prepend_category_token(
    question: &str,
    category: AnswerCategory,
) -> Result<String, CategoryMismatch> {
    match WhWord::from_prefix(question) {
        Some(wh) if wh.category() == category && category != AnswerCategory::Generic => {
            Ok(format!("{} {}", category.as_str(), question))
        }
        _ => Err(CategoryMismatch { category }),
    }
}
