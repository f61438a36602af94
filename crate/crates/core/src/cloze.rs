//! Cloze generation: the sentence (or sub-clause) around an answer, with the
//! answer replaced by a single typed mask token.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answers::{AnalyzedParagraph, AnswerCategory, AnswerSpan};
use crate::corpus::{CoarsePos, Paragraph, Sentence, Token};

/// Clozes longer than this are discarded.
pub const MAX_CLOZE_TOKENS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Boundary {
    Sentence,
    Subclause,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sentence => "SENTENCE",
            Self::Subclause => "SUBCLAUSE",
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SENTENCE" => Ok(Self::Sentence),
            "SUBCLAUSE" | "SUB-CLAUSE" => Ok(Self::Subclause),
            _ => Err(format!(
                "unknown cloze boundary {s:?} (expected sentence or subclause)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ClozeReject {
    #[error("answer is not aligned to token boundaries")]
    Misaligned,
    #[error("answer crosses a sentence boundary")]
    CrossesSentence,
    #[error("cloze has {len} tokens, limit is {limit}")]
    TooLong { len: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeQuestion {
    pub tokens: Vec<String>,
    pub mask_index: usize,
    pub mask_token: String,
    pub boundary: Boundary,
    pub answer: AnswerSpan,
    pub doc_id: String,
    pub para_index: usize,
    /// Paragraph token indices the cloze was cut from, after stripping.
    pub segment: Range<usize>,
}

impl ClozeQuestion {
    /// Tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn category(&self) -> AnswerCategory {
        self.answer.category
    }

    pub fn to_record(&self) -> ClozeRecord {
        ClozeRecord {
            doc_id: self.doc_id.clone(),
            para_index: self.para_index,
            boundary: self.boundary,
            mask_token: self.mask_token.clone(),
            tokens: self.tokens.clone(),
            answer: ClozeAnswerRecord {
                start: self.answer.char_start,
                end: self.answer.char_end,
                text: self.answer.text.clone(),
                category: self.answer.category,
            },
        }
    }
}

/// One line of the exported cloze corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeRecord {
    pub doc_id: String,
    pub para_index: usize,
    pub boundary: Boundary,
    pub mask_token: String,
    pub tokens: Vec<String>,
    pub answer: ClozeAnswerRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeAnswerRecord {
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub category: AnswerCategory,
}

const CLAUSE_PUNCT: &[&str] = &[",", ";", ":", "\u{2014}"];
const CLAUSE_WORDS: &[&str] = &[
    "because", "although", "while", "but", "and", "which", "who", "that", "when", "where", "after",
    "before", "since", "if",
];

fn is_clause_delimiter(tok: &Token) -> bool {
    CLAUSE_PUNCT.contains(&tok.text.as_str()) || CLAUSE_WORDS.contains(&tok.text.as_str())
}

fn has_verb(tokens: &[Token]) -> bool {
    tokens.iter().any(|t| t.coarse_pos == Some(CoarsePos::Verb))
}

/// Shrink a sentence to the minimal clause-like segment containing the
/// answer. A delimiter is only used as a split point when both sides of it
/// (within the current segment) contain a verb; delimiters are excluded from
/// the result. Indices are relative to `sentence`.
pub fn extract_subclause(sentence: &[Token], answer: Range<usize>) -> Range<usize> {
    let mut seg = 0..sentence.len();
    loop {
        let mut best: Option<Range<usize>> = None;
        for d in seg.clone() {
            if answer.contains(&d) || !is_clause_delimiter(&sentence[d]) {
                continue;
            }
            let left = seg.start..d;
            let right = d + 1..seg.end;
            if !has_verb(&sentence[left.clone()]) || !has_verb(&sentence[right.clone()]) {
                continue;
            }
            let side = if answer.end <= d { left } else { right };
            if best.as_ref().is_none_or(|b| side.len() < b.len()) {
                best = Some(side);
            }
        }
        match best {
            Some(next) => seg = next,
            None => return seg,
        }
    }
}

/// Token range exactly covering a character span.
pub fn aligned_token_range(
    tokens: &[Token],
    char_start: usize,
    char_end: usize,
) -> Option<Range<usize>> {
    let first = tokens.partition_point(|t| t.char_end <= char_start);
    let last = tokens.partition_point(|t| t.char_start < char_end);
    let aligned = first < last
        && tokens[first].char_start == char_start
        && tokens[last - 1].char_end == char_end;
    aligned.then_some(first..last)
}

/// Build a cloze with the standard 40-token limit.
pub fn make_cloze(
    paragraph: &Paragraph,
    sentences: &[Sentence],
    tokens: &[Token],
    answer: &AnswerSpan,
    boundary: Boundary,
) -> Result<ClozeQuestion, ClozeReject> {
    make_cloze_with_limit(
        paragraph,
        sentences,
        tokens,
        answer,
        boundary,
        Some(MAX_CLOZE_TOKENS),
    )
}

pub fn cloze_for(
    analyzed: &AnalyzedParagraph,
    answer: &AnswerSpan,
    boundary: Boundary,
) -> Result<ClozeQuestion, ClozeReject> {
    make_cloze(
        &analyzed.paragraph,
        &analyzed.sentences,
        &analyzed.tokens,
        answer,
        boundary,
    )
}

pub fn make_cloze_with_limit(
    paragraph: &Paragraph,
    sentences: &[Sentence],
    tokens: &[Token],
    answer: &AnswerSpan,
    boundary: Boundary,
    max_tokens: Option<usize>,
) -> Result<ClozeQuestion, ClozeReject> {
    let ans = aligned_token_range(tokens, answer.char_start, answer.char_end)
        .ok_or(ClozeReject::Misaligned)?;
    let sentence = sentences
        .iter()
        .find(|s| s.token_range.start <= ans.start && ans.end <= s.token_range.end)
        .ok_or(ClozeReject::CrossesSentence)?;
    let base = sentence.token_range.start;

    let mut seg = match boundary {
        Boundary::Sentence => sentence.token_range.clone(),
        Boundary::Subclause => {
            let local = extract_subclause(
                &tokens[sentence.token_range.clone()],
                ans.start - base..ans.end - base,
            );
            local.start + base..local.end + base
        }
    };
    if seg.end > ans.end && tokens[seg.end - 1].is_punct() {
        seg.end -= 1;
    }

    let len = seg.len() - ans.len() + 1;
    if let Some(limit) = max_tokens {
        if len > limit {
            return Err(ClozeReject::TooLong { len, limit });
        }
    }

    let mask_token = answer.mask_token().to_string();
    let mut out = Vec::with_capacity(len);
    out.extend(tokens[seg.start..ans.start].iter().map(|t| t.text.clone()));
    let mask_index = out.len();
    out.push(mask_token.clone());
    out.extend(tokens[ans.end..seg.end].iter().map(|t| t.text.clone()));

    Ok(ClozeQuestion {
        tokens: out,
        mask_index,
        mask_token,
        boundary,
        answer: answer.clone(),
        doc_id: paragraph.doc_id.clone(),
        para_index: paragraph.para_index,
        segment: seg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::answers::{extract_noun_phrases, AnswerSource};
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    const FIG1: &str = "For many years the London Sevens was the last tournament of each season but the Paris Sevens became the last stop on the calendar in 2018.";

    fn analyzed(text: &str) -> AnalyzedParagraph {
        AnalyzedParagraph::analyze(Paragraph::new("doc", 3, text))
    }

    fn span_of(a: &AnalyzedParagraph, needle: &str, label: &str) -> AnswerSpan {
        let byte = a.paragraph.text.find(needle).unwrap();
        let start = a.paragraph.text[..byte].chars().count();
        AnswerSpan::named_entity(&a.paragraph, start, start + needle.chars().count(), label)
            .unwrap()
            .unwrap()
    }

    #[test]
    fn figure_one_subclause() {
        let a = analyzed(FIG1);
        let ans = span_of(&a, "2018", "DATE");
        let c = cloze_for(&a, &ans, Boundary::Subclause).unwrap();
        assert_eq!(
            c.text(),
            "the Paris Sevens became the last stop on the calendar in TEMPORAL"
        );
        assert_eq!(c.mask_token, "TEMPORAL");
        assert_eq!(c.tokens[c.mask_index], "TEMPORAL");
        assert_eq!((c.doc_id.as_str(), c.para_index), ("doc", 3));
    }

    #[test]
    fn figure_one_sentence() {
        let a = analyzed(FIG1);
        let ans = span_of(&a, "2018", "DATE");
        let c = cloze_for(&a, &ans, Boundary::Sentence).unwrap();
        assert_eq!(
            c.text(),
            "For many years the London Sevens was the last tournament of each season but the Paris Sevens became the last stop on the calendar in TEMPORAL"
        );
    }

    #[test]
    fn noun_phrase_uses_generic_mask() {
        let a = analyzed(FIG1);
        let nps = extract_noun_phrases(&a.paragraph, &a.tokens);
        let cal = nps.iter().find(|n| n.text == "the calendar").unwrap();
        assert_eq!(cal.source, AnswerSource::NounPhrase);
        let c = cloze_for(&a, cal, Boundary::Subclause).unwrap();
        assert_eq!(
            c.text(),
            "the Paris Sevens became the last stop on MASK in 2018"
        );
    }

    #[test]
    fn subclause_without_delimiter_is_whole_sentence() {
        let a = analyzed("He left.");
        assert_eq!(extract_subclause(&a.tokens, 0..1), 0..3);
    }

    #[test]
    fn subclause_requires_verbs_on_both_sides() {
        let a = analyzed("red, green and blue items");
        assert_eq!(extract_subclause(&a.tokens, 2..3), 0..a.tokens.len());
    }

    #[test]
    fn subclause_nested_splits() {
        let a = analyzed("The club was founded in 1901, and it moved to Rome after the war ended.");
        let ans = span_of(&a, "Rome", "GPE");
        let c = cloze_for(&a, &ans, Boundary::Subclause).unwrap();
        assert_eq!(c.text(), "it moved to PLACE");
    }

    #[test]
    fn crossing_answer_rejected() {
        let a = analyzed("It rained. We left.");
        let ans = AnswerSpan::noun_phrase(&a.paragraph, 3, 13).unwrap();
        assert_eq!(
            cloze_for(&a, &ans, Boundary::Sentence),
            Err(ClozeReject::CrossesSentence)
        );
        let partial = AnswerSpan::noun_phrase(&a.paragraph, 4, 6).unwrap();
        assert_eq!(
            cloze_for(&a, &partial, Boundary::Sentence),
            Err(ClozeReject::Misaligned)
        );
    }

    #[test]
    fn long_cloze_rejected() {
        let text = format!("{} Paris.", vec!["word"; 45].join(" "));
        let a = analyzed(&text);
        let ans = span_of(&a, "Paris", "GPE");
        assert_eq!(
            cloze_for(&a, &ans, Boundary::Sentence),
            Err(ClozeReject::TooLong { len: 46, limit: 40 })
        );
        let unbounded = make_cloze_with_limit(
            &a.paragraph,
            &a.sentences,
            &a.tokens,
            &ans,
            Boundary::Sentence,
            None,
        )
        .unwrap();
        assert_eq!(unbounded.tokens.len(), 46);
    }

    #[test]
    fn exactly_forty_tokens_allowed() {
        let text = format!("{} Paris.", vec!["word"; 39].join(" "));
        let a = analyzed(&text);
        let c = cloze_for(&a, &span_of(&a, "Paris", "GPE"), Boundary::Sentence).unwrap();
        assert_eq!(c.tokens.len(), 40);
    }

    #[test]
    fn only_final_punct_stripped() {
        let a = analyzed("They went to Paris!");
        let c = cloze_for(&a, &span_of(&a, "They", "ORG"), Boundary::Sentence).unwrap();
        assert_eq!(c.text(), "PERSON_NORP_ORG went to Paris");
        // the answer itself is never stripped
        let b = analyzed("Go.");
        let dot = AnswerSpan::noun_phrase(&b.paragraph, 2, 3).unwrap();
        assert_eq!(
            cloze_for(&b, &dot, Boundary::Sentence).unwrap().text(),
            "Go MASK"
        );
    }

    fn sentence_strategy() -> impl Strategy<Value = String> {
        let word = prop::sample::select(vec![
            "the", "Paris", "river", "was", "built", "and", "but", "which", "in", "1990", "large",
            "city", "because", "it", "grew", ",", "John", "Smith", "became", "of", "old",
        ]);
        prop::collection::vec(word, 1..60).prop_map(|w| format!("{}.", w.join(" ")))
    }

    proptest! {
        #[test]
        fn cloze_reinserts_to_source_slice(text in sentence_strategy(), pick in any::<prop::sample::Index>(),
                                           sub in any::<bool>()) {
            let a = analyzed(&text);
            let nps = extract_noun_phrases(&a.paragraph, &a.tokens);
            prop_assume!(!nps.is_empty());
            let ans = pick.get(&nps);
            let boundary = if sub { Boundary::Subclause } else { Boundary::Sentence };
            match cloze_for(&a, ans, boundary) {
                Ok(c) => {
                    prop_assert!(c.tokens.len() <= MAX_CLOZE_TOKENS);
                    prop_assert_eq!(&c.tokens[c.mask_index], &c.mask_token);
                    let mut rebuilt: Vec<String> = c.tokens[..c.mask_index].to_vec();
                    rebuilt.extend(tokenize(&ans.text).into_iter().map(|t| t.text));
                    rebuilt.extend(c.tokens[c.mask_index + 1..].iter().cloned());
                    let source: Vec<String> = a.tokens[c.segment.clone()].iter().map(|t| t.text.clone()).collect();
                    prop_assert_eq!(rebuilt, source);
                    let sentence = a.sentences.iter().rev().find(|s| s.token_range.start <= c.segment.start).unwrap();
                    prop_assert!(c.segment.end <= sentence.token_range.end);
                }
                Err(ClozeReject::TooLong { len, .. }) => prop_assert!(len > MAX_CLOZE_TOKENS),
                Err(e) => prop_assert!(false, "unexpected reject {e}"),
            }
        }
    }
}
