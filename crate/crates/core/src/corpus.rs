//! Text model: documents, paragraphs, offset-preserving tokens and sentences,
//! plus uniform paragraph sampling over a document stream.
//!
//! All public offsets are Unicode scalar value indices, the unit SQuAD uses
//! for `answer_start`. Tokens additionally carry byte offsets for slicing.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{source_name}:{line}: I/O error: {source}")]
    Io {
        source_name: String,
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: malformed document: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("{source_name}:{line}: document id is empty")]
    EmptyDocId { source_name: String, line: usize },
    #[error("{source_name}:{line}: duplicate document id {doc_id:?}")]
    DuplicateDocId {
        source_name: String,
        line: usize,
        doc_id: String,
    },
}

/// One source document, read from a JSONL line `{"id", "title", "text"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        title: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: title.into(),
            text: text.into(),
        }
    }

    /// Split on line breaks; every non-blank line (trimmed) is a paragraph.
    /// `para_index` counts all paragraphs of the document, eligible or not.
    pub fn paragraphs(&self) -> Vec<Paragraph> {
        let mut out = Vec::new();
        let mut char_pos = 0usize;
        for line in self.text.split('\n') {
            let line_chars = line.chars().count();
            let leading = line.chars().take_while(|c| c.is_whitespace()).count();
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                out.push(Paragraph {
                    doc_id: self.doc_id.clone(),
                    title: self.title.clone(),
                    para_index: out.len(),
                    text: trimmed.to_string(),
                    char_offset_in_doc: char_pos + leading,
                });
            }
            // +1 for the '\n' consumed by split
            char_pos += line_chars + 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    pub para_index: usize,
    pub text: String,
    pub char_offset_in_doc: usize,
}

impl Paragraph {
    pub fn new(doc_id: impl Into<String>, para_index: usize, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: String::new(),
            para_index,
            text: text.into(),
            char_offset_in_doc: 0,
        }
    }

    pub fn slice(&self, char_start: usize, char_end: usize) -> Option<&str> {
        char_slice(&self.text, char_start, char_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CoarsePos {
    Det,
    Adj,
    Noun,
    Propn,
    Verb,
    Num,
    Punct,
    Other,
}

impl CoarsePos {
    pub fn parse(label: &str) -> Option<Self> {
        Some(match label.to_ascii_uppercase().as_str() {
            "DET" => Self::Det,
            "ADJ" => Self::Adj,
            "NOUN" => Self::Noun,
            "PROPN" => Self::Propn,
            "VERB" | "AUX" => Self::Verb,
            "NUM" => Self::Num,
            "PUNCT" => Self::Punct,
            "OTHER" | "X" => Self::Other,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Det => "DET",
            Self::Adj => "ADJ",
            Self::Noun => "NOUN",
            Self::Propn => "PROPN",
            Self::Verb => "VERB",
            Self::Num => "NUM",
            Self::Punct => "PUNCT",
            Self::Other => "OTHER",
        }
    }
}

impl fmt::Display for CoarsePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Character offsets into the paragraph text, end exclusive.
    pub char_start: usize,
    pub char_end: usize,
    /// Byte offsets matching `char_start..char_end`.
    pub byte_start: usize,
    pub byte_end: usize,
    pub coarse_pos: Option<CoarsePos>,
}

impl Token {
    pub fn is_punct(&self) -> bool {
        self.text.chars().all(is_punct_char)
    }

    pub fn pos(&self) -> CoarsePos {
        self.coarse_pos.unwrap_or(CoarsePos::Other)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub token_range: Range<usize>,
    pub char_start: usize,
    pub char_end: usize,
}

/// Punctuation and symbol characters that always form their own token.
pub fn is_punct_char(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation();
    }
    matches!(c,
        '\u{00A1}'..='\u{00A9}' | '\u{00AB}'..='\u{00B1}' | '\u{00B4}' | '\u{00B6}'..='\u{00B8}'
        | '\u{00BB}' | '\u{00BF}' | '\u{00D7}' | '\u{00F7}'
        | '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205E}' | '\u{20A0}'..='\u{20CF}'
        | '\u{2190}'..='\u{21FF}' | '\u{2200}'..='\u{22FF}'
        | '\u{3001}'..='\u{303F}' | '\u{FF01}'..='\u{FF0F}' | '\u{FF1A}'..='\u{FF20}'
        | '\u{FF3B}'..='\u{FF40}' | '\u{FF5B}'..='\u{FF65}')
}

/// Split on whitespace and punctuation. Punctuation characters are tokens of
/// their own, except a `.` or `,` sitting between two digits, which stays
/// inside the number ("2.30", "15,000").
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut word_start: Option<usize> = None; // index into chars

    let flush = |tokens: &mut Vec<Token>, start: usize, end: usize| {
        let byte_start = chars[start].0;
        let byte_end = chars.get(end).map_or(text.len(), |&(b, _)| b);
        tokens.push(Token {
            text: text[byte_start..byte_end].to_string(),
            char_start: start,
            char_end: end,
            byte_start,
            byte_end,
            coarse_pos: None,
        });
    };

    for (i, &(_, c)) in chars.iter().enumerate() {
        if c.is_whitespace() {
            if let Some(s) = word_start.take() {
                flush(&mut tokens, s, i);
            }
        } else if is_punct_char(c) {
            let numeric_glue = (c == '.' || c == ',')
                && word_start.is_some()
                && i > 0
                && chars[i - 1].1.is_ascii_digit()
                && chars.get(i + 1).is_some_and(|&(_, n)| n.is_ascii_digit());
            if numeric_glue {
                continue;
            }
            if let Some(s) = word_start.take() {
                flush(&mut tokens, s, i);
            }
            flush(&mut tokens, i, i + 1);
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    if let Some(s) = word_start {
        flush(&mut tokens, s, chars.len());
    }
    tokens
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Slice `text` by character offsets. `None` when out of range.
pub fn char_slice(text: &str, char_start: usize, char_end: usize) -> Option<&str> {
    if char_start > char_end {
        return None;
    }
    let mut indices = text
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()));
    let start = indices.nth(char_start)?;
    let end = if char_end == char_start {
        start
    } else {
        indices.nth(char_end - char_start - 1)?
    };
    Some(&text[start..end])
}

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "Sr.", "Jr.", "St.", "Mt.", "Ft.", "Gen.", "Col.", "Lt.",
    "Sgt.", "Capt.", "Cmdr.", "Gov.", "Sen.", "Rep.", "Rev.", "Hon.", "Pres.", "Inc.", "Ltd.",
    "Co.", "Corp.", "Bros.", "vs.", "etc.", "e.g.", "i.e.", "cf.", "al.", "ca.", "approx.", "a.m.",
    "p.m.", "U.S.", "U.K.", "U.N.", "No.", "Nos.", "Fig.", "Vol.", "pp.", "Jan.", "Feb.", "Mar.",
    "Apr.", "Jun.", "Jul.", "Aug.", "Sep.", "Sept.", "Oct.", "Nov.", "Dec.", "Ave.", "Blvd.",
    "Rd.", "Dept.", "Univ.", "Est.",
];

/// Rule-based sentence splitter with an abbreviation exception list.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl SentenceSplitter {
    pub fn with_abbreviations<'a>(abbrevs: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            abbreviations: abbrevs.into_iter().map(str::to_string).collect(),
        }
    }

    pub fn split(&self, text: &str, tokens: &[Token]) -> Vec<Sentence> {
        let mut sentences = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < tokens.len() {
            if !is_terminal(&tokens[i].text) {
                i += 1;
                continue;
            }
            // absorb adjacent terminals and closing quotes/brackets: `?!`, `."`, `.)`
            let mut end = i + 1;
            while end < tokens.len()
                && adjacent(&tokens[end - 1], &tokens[end])
                && (is_terminal(&tokens[end].text) || is_closer(&tokens[end].text))
            {
                end += 1;
            }
            let is_boundary = match tokens.get(end) {
                None => true,
                Some(next) => {
                    let lower_next = next.text.chars().next().is_some_and(char::is_lowercase);
                    !lower_next && !(tokens[i].text == "." && self.is_abbreviation(text, tokens, i))
                }
            };
            if is_boundary {
                sentences.push(make_sentence(tokens, start..end));
                start = end;
            }
            i = end;
        }
        if start < tokens.len() {
            sentences.push(make_sentence(tokens, start..tokens.len()));
        }
        sentences
    }

    /// The whitespace-delimited word ending at the period `tokens[period]`.
    fn is_abbreviation(&self, text: &str, tokens: &[Token], period: usize) -> bool {
        let mut first = period;
        while first > 0 && adjacent(&tokens[first - 1], &tokens[first]) {
            first -= 1;
        }
        if first == period {
            return false;
        }
        let word = &text[tokens[first].byte_start..tokens[period].byte_end];
        self.abbreviations.contains(word)
    }
}

fn is_terminal(tok: &str) -> bool {
    matches!(tok, "." | "!" | "?")
}

fn is_closer(tok: &str) -> bool {
    matches!(
        tok,
        "\"" | "'" | ")" | "]" | "\u{201D}" | "\u{2019}" | "\u{00BB}"
    )
}

fn adjacent(a: &Token, b: &Token) -> bool {
    a.char_end == b.char_start
}

fn make_sentence(tokens: &[Token], range: Range<usize>) -> Sentence {
    Sentence {
        char_start: tokens[range.start].char_start,
        char_end: tokens[range.end - 1].char_end,
        token_range: range,
    }
}

/// Split a paragraph's tokens into sentences with the default abbreviations.
pub fn split_sentences(paragraph: &Paragraph, tokens: &[Token]) -> Vec<Sentence> {
    SentenceSplitter::default().split(&paragraph.text, tokens)
}

/// Inclusive token-count bounds for eligible paragraphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBounds {
    pub min_tokens: usize,
    pub max_tokens: usize,
}

impl Default for LengthBounds {
    fn default() -> Self {
        Self {
            min_tokens: 40,
            max_tokens: 550,
        }
    }
}

impl LengthBounds {
    pub fn new(min_tokens: usize, max_tokens: usize) -> Self {
        Self {
            min_tokens,
            max_tokens,
        }
    }

    pub fn contains(&self, n: usize) -> bool {
        (self.min_tokens..=self.max_tokens).contains(&n)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParagraphSample {
    /// Sampled paragraphs in corpus order.
    pub paragraphs: Vec<Paragraph>,
    pub documents_seen: usize,
    pub paragraphs_seen: usize,
    pub eligible: usize,
    /// How many of the requested paragraphs could not be supplied.
    pub shortfall: usize,
}

/// Reservoir-sample `n` paragraphs uniformly among those whose token count
/// lies within `bounds`.
pub fn sample_paragraphs<I>(docs: I, n: usize, bounds: LengthBounds, seed: u64) -> ParagraphSample
where
    I: IntoIterator<Item = Document>,
{
    try_sample_paragraphs(docs.into_iter().map(Ok::<_, CorpusError>), n, bounds, seed)
        .expect("infallible document stream")
}

pub fn try_sample_paragraphs<I, E>(
    docs: I,
    n: usize,
    bounds: LengthBounds,
    seed: u64,
) -> Result<ParagraphSample, E>
where
    I: IntoIterator<Item = Result<Document, E>>,
{
    let mut rng = seed::rng_from_seed(seed::derive_seed(seed, &[b"paragraph-sample"]));
    let mut reservoir: Vec<(usize, Paragraph)> = Vec::with_capacity(n);
    let mut out = ParagraphSample::default();
    for doc in docs {
        let doc = doc?;
        out.documents_seen += 1;
        for para in doc.paragraphs() {
            out.paragraphs_seen += 1;
            if !bounds.contains(tokenize(&para.text).len()) {
                continue;
            }
            let t = out.eligible;
            out.eligible += 1;
            if n == 0 {
                continue;
            }
            if reservoir.len() < n {
                reservoir.push((t, para));
            } else {
                let j = rng.gen_range(0..=t);
                if j < n {
                    reservoir[j] = (t, para);
                }
            }
        }
    }
    reservoir.sort_by_key(|(t, _)| *t);
    out.paragraphs = reservoir.into_iter().map(|(_, p)| p).collect();
    out.shortfall = n - out.paragraphs.len();
    if out.shortfall > 0 {
        log::warn!(
            "requested {n} paragraphs but only {} eligible; shortfall {}",
            out.eligible,
            out.shortfall
        );
    }
    Ok(out)
}

/// Streams documents from JSONL, one object per line. Blank lines are
/// skipped; ids must be non-empty and unique within the stream.
pub struct DocumentReader<R> {
    reader: R,
    source_name: String,
    line: usize,
    seen: HashSet<String>,
    buf: String,
}

impl<R: BufRead> DocumentReader<R> {
    pub fn new(reader: R, source_name: impl Into<String>) -> Self {
        Self {
            reader,
            source_name: source_name.into(),
            line: 0,
            seen: HashSet::new(),
            buf: String::new(),
        }
    }
}

impl DocumentReader<std::io::BufReader<std::fs::File>> {
    pub fn open(path: &std::path::Path) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
            source_name: path.display().to_string(),
            line: 0,
            source,
        })?;
        Ok(Self::new(
            std::io::BufReader::new(file),
            path.display().to_string(),
        ))
    }
}

impl<R: BufRead> Iterator for DocumentReader<R> {
    type Item = Result<Document, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line += 1;
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(source) => {
                    return Some(Err(CorpusError::Io {
                        source_name: self.source_name.clone(),
                        line: self.line,
                        source,
                    }))
                }
            }
            if self.buf.trim().is_empty() {
                continue;
            }
            let doc: Document = match serde_json::from_str(self.buf.trim_end()) {
                Ok(doc) => doc,
                Err(e) => {
                    return Some(Err(CorpusError::Parse {
                        source_name: self.source_name.clone(),
                        line: self.line,
                        message: e.to_string(),
                    }))
                }
            };
            if doc.doc_id.is_empty() {
                return Some(Err(CorpusError::EmptyDocId {
                    source_name: self.source_name.clone(),
                    line: self.line,
                }));
            }
            if !self.seen.insert(doc.doc_id.clone()) {
                return Some(Err(CorpusError::DuplicateDocId {
                    source_name: self.source_name.clone(),
                    line: self.line,
                    doc_id: doc.doc_id,
                }));
            }
            return Some(Ok(doc));
        }
    }
}
