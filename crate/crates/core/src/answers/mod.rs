//! Answer priors: candidate spans from noun-phrase chunking or named entity
//! tagging, entity label to answer category mapping, and uniform sampling.

pub mod pos;
mod tagger;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, CoarsePos, Paragraph, Sentence, Token};
use crate::plugin::PluginError;

pub use tagger::BuiltinTagger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnswerSource {
    #[serde(rename = "NE")]
    NamedEntity,
    #[serde(rename = "NP")]
    NounPhrase,
}

impl AnswerSource {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NamedEntity => "NE",
            Self::NounPhrase => "NP",
        }
    }
}

impl FromStr for AnswerSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "NE" => Ok(Self::NamedEntity),
            "NP" => Ok(Self::NounPhrase),
            _ => Err(format!("unknown answer source {s:?} (expected NE or NP)")),
        }
    }
}

/// High level answer category. The name doubles as the typed mask token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AnswerCategory {
    PersonNorpOrg,
    Place,
    Thing,
    Temporal,
    Numeric,
    Generic,
}

impl AnswerCategory {
    pub const TYPED: [AnswerCategory; 5] = [
        Self::PersonNorpOrg,
        Self::Place,
        Self::Thing,
        Self::Temporal,
        Self::Numeric,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PersonNorpOrg => "PERSON_NORP_ORG",
            Self::Place => "PLACE",
            Self::Thing => "THING",
            Self::Temporal => "TEMPORAL",
            Self::Numeric => "NUMERIC",
            Self::Generic => "GENERIC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "PERSON_NORP_ORG" => Self::PersonNorpOrg,
            "PLACE" => Self::Place,
            "THING" => Self::Thing,
            "TEMPORAL" => Self::Temporal,
            "NUMERIC" => Self::Numeric,
            "GENERIC" => Self::Generic,
            _ => return None,
        })
    }
}

impl fmt::Display for AnswerCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown entity label {0:?}")]
pub struct UnknownLabel(pub String);

/// Map a fine-grained entity label onto its answer category.
pub fn categorize(ne_label: &str) -> Result<AnswerCategory, UnknownLabel> {
    use AnswerCategory::*;
    Ok(match ne_label {
        "PERSON" | "NORP" | "ORG" => PersonNorpOrg,
        "GPE" | "LOC" | "FAC" => Place,
        "PRODUCT" | "EVENT" | "WORKOFART" | "LAW" | "LANGUAGE" => Thing,
        "TIME" | "DATE" => Temporal,
        "PERCENT" | "MONEY" | "QUANTITY" | "ORDINAL" | "CARDINAL" => Numeric,
        other => return Err(UnknownLabel(other.to_string())),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
    pub source: AnswerSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ne_label: Option<String>,
    pub category: AnswerCategory,
}

impl AnswerSpan {
    pub fn noun_phrase(paragraph: &Paragraph, char_start: usize, char_end: usize) -> Option<Self> {
        Some(Self {
            char_start,
            char_end,
            text: paragraph.slice(char_start, char_end)?.to_string(),
            source: AnswerSource::NounPhrase,
            ne_label: None,
            category: AnswerCategory::Generic,
        })
    }

    pub fn named_entity(
        paragraph: &Paragraph,
        char_start: usize,
        char_end: usize,
        label: &str,
    ) -> Result<Option<Self>, UnknownLabel> {
        let category = categorize(label)?;
        Ok(paragraph.slice(char_start, char_end).map(|text| Self {
            char_start,
            char_end,
            text: text.to_string(),
            source: AnswerSource::NamedEntity,
            ne_label: Some(label.to_string()),
            category,
        }))
    }

    pub fn mask_token(&self) -> &'static str {
        match self.source {
            AnswerSource::NounPhrase => "MASK",
            AnswerSource::NamedEntity => self.category.as_str(),
        }
    }
}

/// Tagger output before category mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSpan {
    pub char_start: usize,
    pub char_end: usize,
    pub label: String,
}

/// Anything that labels character spans of a paragraph.
pub trait SpanTagger {
    fn name(&self) -> &str;
    fn tag(&mut self, paragraph: &Paragraph) -> Result<Vec<TaggedSpan>, PluginError>;
}

#[derive(Debug, Error)]
pub enum AnswerError {
    #[error("no answer candidates")]
    NoCandidates,
    #[error(transparent)]
    Plugin(#[from] PluginError),
}

/// A paragraph together with its POS-tagged tokens and sentences.
#[derive(Debug, Clone)]
pub struct AnalyzedParagraph {
    pub paragraph: Paragraph,
    pub tokens: Vec<Token>,
    pub sentences: Vec<Sentence>,
}

impl AnalyzedParagraph {
    /// Tokenize, split sentences and tag with the built-in POS tagger.
    pub fn analyze(paragraph: Paragraph) -> Self {
        let mut tokens = corpus::tokenize(&paragraph.text);
        pos::tag_pos(&mut tokens);
        let sentences = corpus::split_sentences(&paragraph, &tokens);
        Self {
            paragraph,
            tokens,
            sentences,
        }
    }

    /// Token index range covering exactly `char_start..char_end`, if the
    /// span is token aligned.
    pub fn token_range(
        &self,
        char_start: usize,
        char_end: usize,
    ) -> Option<std::ops::Range<usize>> {
        let first = self.tokens.partition_point(|t| t.char_end <= char_start);
        let last = self.tokens.partition_point(|t| t.char_start < char_end);
        let aligned = first < last
            && self.tokens[first].char_start == char_start
            && self.tokens[last - 1].char_end == char_end;
        aligned.then_some(first..last)
    }
}

/// Maximal, non-overlapping matches of `DET? (ADJ|NUM)* (NOUN|PROPN)+`,
/// scanned left to right. Character offsets are taken from the tokens.
pub fn extract_noun_phrase_ranges(tokens: &[Token]) -> Vec<std::ops::Range<usize>> {
    let pos: Vec<CoarsePos> = tokens.iter().map(Token::pos).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < pos.len() {
        let mut j = i;
        if pos[j] == CoarsePos::Det {
            j += 1;
        }
        while j < pos.len() && matches!(pos[j], CoarsePos::Adj | CoarsePos::Num) {
            j += 1;
        }
        let head_start = j;
        while j < pos.len() && matches!(pos[j], CoarsePos::Noun | CoarsePos::Propn) {
            j += 1;
        }
        if j > head_start {
            out.push(i..j);
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

pub fn extract_noun_phrases(paragraph: &Paragraph, tokens: &[Token]) -> Vec<AnswerSpan> {
    extract_noun_phrase_ranges(tokens)
        .into_iter()
        .filter_map(|r| {
            AnswerSpan::noun_phrase(
                paragraph,
                tokens[r.start].char_start,
                tokens[r.end - 1].char_end,
            )
        })
        .collect()
}

/// Keep the leftmost-longest span among overlaps.
pub fn resolve_overlaps(mut spans: Vec<TaggedSpan>) -> Vec<TaggedSpan> {
    spans.sort_by(|a, b| {
        a.char_start
            .cmp(&b.char_start)
            .then((b.char_end - b.char_start).cmp(&(a.char_end - a.char_start)))
    });
    let mut out: Vec<TaggedSpan> = Vec::with_capacity(spans.len());
    for s in spans {
        if out.last().is_none_or(|last| s.char_start >= last.char_end) {
            out.push(s);
        }
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct EntityExtraction {
    pub spans: Vec<AnswerSpan>,
    /// Tagger spans dropped because their label has no category.
    pub unmappable: usize,
}

pub fn extract_named_entities(
    paragraph: &Paragraph,
    tagger: &mut dyn SpanTagger,
) -> Result<EntityExtraction, PluginError> {
    let tagged = tagger.tag(paragraph)?;
    Ok(entities_from_tags(paragraph, tagged))
}

/// Category-map and overlap-resolve spans already obtained from a tagger.
pub fn entities_from_tags(paragraph: &Paragraph, tagged: Vec<TaggedSpan>) -> EntityExtraction {
    let mut out = EntityExtraction::default();
    for span in resolve_overlaps(tagged) {
        match AnswerSpan::named_entity(paragraph, span.char_start, span.char_end, &span.label) {
            Ok(Some(a)) => out.spans.push(a),
            Ok(None) => {}
            Err(_) => out.unmappable += 1,
        }
    }
    out
}

/// Uniform draw over the candidates.
pub fn sample_answer<'a, R: Rng + ?Sized>(
    candidates: &'a [AnswerSpan],
    rng: &mut R,
) -> Result<&'a AnswerSpan, AnswerError> {
    if candidates.is_empty() {
        return Err(AnswerError::NoCandidates);
    }
    Ok(&candidates[rng.gen_range(0..candidates.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use crate::seed::rng_from_seed;

    fn tokens_with(tags: &[CoarsePos]) -> Vec<Token> {
        let text: Vec<String> = (0..tags.len()).map(|i| format!("w{i}")).collect();
        let mut toks = tokenize(&text.join(" "));
        for (t, p) in toks.iter_mut().zip(tags) {
            t.coarse_pos = Some(*p);
        }
        toks
    }

    #[test]
    fn np_grammar_examples() {
        use CoarsePos::*;
        assert_eq!(
            extract_noun_phrase_ranges(&tokens_with(&[Det, Adj, Adj, Noun, Verb])),
            vec![0..4]
        );
        assert!(extract_noun_phrase_ranges(&tokens_with(&[Verb, Verb])).is_empty());
        assert_eq!(
            extract_noun_phrase_ranges(&tokens_with(&[Noun, Punct, Noun])),
            [0..1, 2..3]
        );
        assert_eq!(
            extract_noun_phrase_ranges(&tokens_with(&[Det, Num, Propn, Propn, Other, Det, Adj])),
            vec![0..4]
        );
    }

    #[test]
    fn np_spans_carry_offsets() {
        let para = Paragraph::new("d", 0, "The quick brown fox jumped");
        let analyzed = AnalyzedParagraph::analyze(para.clone());
        let nps = extract_noun_phrases(&para, &analyzed.tokens);
        assert_eq!(nps.len(), 1);
        assert_eq!(nps[0].text, "The quick brown fox");
        assert_eq!((nps[0].char_start, nps[0].char_end), (0, 19));
        assert_eq!(nps[0].category, AnswerCategory::Generic);
        assert_eq!(nps[0].mask_token(), "MASK");
    }

    #[test]
    fn categorize_table() {
        use AnswerCategory::*;
        let table = [
            ("PERSON", PersonNorpOrg),
            ("NORP", PersonNorpOrg),
            ("ORG", PersonNorpOrg),
            ("GPE", Place),
            ("LOC", Place),
            ("FAC", Place),
            ("PRODUCT", Thing),
            ("EVENT", Thing),
            ("WORKOFART", Thing),
            ("LAW", Thing),
            ("LANGUAGE", Thing),
            ("TIME", Temporal),
            ("DATE", Temporal),
            ("PERCENT", Numeric),
            ("MONEY", Numeric),
            ("QUANTITY", Numeric),
            ("ORDINAL", Numeric),
            ("CARDINAL", Numeric),
        ];
        for (label, cat) in table {
            assert_eq!(categorize(label), Ok(cat), "{label}");
        }
        assert_eq!(categorize("FOO"), Err(UnknownLabel("FOO".into())));
        assert!(categorize("date").is_err());
        assert!(categorize("WORK_OF_ART").is_err());
    }

    struct FixedTagger(Vec<TaggedSpan>);

    impl SpanTagger for FixedTagger {
        fn name(&self) -> &str {
            "fixed"
        }
        fn tag(&mut self, _: &Paragraph) -> Result<Vec<TaggedSpan>, PluginError> {
            Ok(self.0.clone())
        }
    }

    fn ts(s: usize, e: usize, l: &str) -> TaggedSpan {
        TaggedSpan {
            char_start: s,
            char_end: e,
            label: l.into(),
        }
    }

    #[test]
    fn ne_extraction_maps_and_drops() {
        let para = Paragraph::new("d", 0, "It ended in 2018 in France.");
        let mut tagger = FixedTagger(vec![ts(12, 16, "DATE"), ts(20, 26, "GPE"), ts(0, 2, "FOO")]);
        let ex = extract_named_entities(&para, &mut tagger).unwrap();
        assert_eq!(ex.unmappable, 1);
        assert_eq!(ex.spans.len(), 2);
        assert_eq!(ex.spans[0].text, "2018");
        assert_eq!(ex.spans[0].category, AnswerCategory::Temporal);
        assert_eq!(ex.spans[0].mask_token(), "TEMPORAL");
        assert_eq!(ex.spans[1].category, AnswerCategory::Place);

        let mut empty = FixedTagger(vec![]);
        assert!(extract_named_entities(&para, &mut empty)
            .unwrap()
            .spans
            .is_empty());
    }

    #[test]
    fn overlaps_leftmost_longest() {
        let out = resolve_overlaps(vec![
            ts(5, 9, "B"),
            ts(0, 3, "A"),
            ts(0, 6, "C"),
            ts(6, 8, "D"),
        ]);
        assert_eq!(out, [ts(0, 6, "C"), ts(6, 8, "D")]);
    }

    #[test]
    fn sample_answer_rules() {
        let para = Paragraph::new("d", 0, "a b c d");
        let cands: Vec<AnswerSpan> = (0..4)
            .map(|i| AnswerSpan::noun_phrase(&para, 2 * i, 2 * i + 1).unwrap())
            .collect();
        let mut rng = rng_from_seed(5);
        assert!(matches!(
            sample_answer(&[], &mut rng),
            Err(AnswerError::NoCandidates)
        ));
        assert_eq!(sample_answer(&cands[..1], &mut rng).unwrap(), &cands[0]);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[sample_answer(&cands, &mut rng).unwrap().char_start / 2] += 1;
        }
        assert!(
            counts.iter().all(|c| (2300..=2700).contains(c)),
            "{counts:?}"
        );
    }

    #[test]
    fn token_range_alignment() {
        let a = AnalyzedParagraph::analyze(Paragraph::new("d", 0, "in 2018, the end."));
        assert_eq!(a.token_range(3, 7), Some(1..2));
        assert_eq!(a.token_range(9, 16), Some(3..5));
        assert_eq!(a.token_range(4, 7), None);
        assert_eq!(a.token_range(3, 8), Some(1..3));
    }
}
