//! End-to-end generation of (context, question, answer) triples, SQuAD v1.1
//! serialization, and question/context overlap statistics.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::answers::{
    entities_from_tags, extract_noun_phrases, AnalyzedParagraph, AnswerCategory, AnswerSource,
    AnswerSpan, BuiltinTagger, TaggedSpan,
};
use crate::cloze::{make_cloze, Boundary, ClozeQuestion, ClozeReject};
use crate::corpus::{self, CorpusError, Document, LengthBounds, Paragraph};
use crate::plugin::{PluginError, PluginTagger, PluginTranslator};
use crate::seed;
use crate::translate::{
    external_translate, identity_translate, noisy_translate, NaturalQuestion, NoiseConfig,
    TranslationMethod, WhMode, WhWord,
};

/// Held-out split size used when none is given.
pub const DEFAULT_DEV_PARAGRAPHS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub answer_source: AnswerSource,
    pub boundary: Boundary,
    pub method: TranslationMethod,
    pub wh_mode: WhMode,
    pub noise: NoiseConfig,
    pub n_paragraphs: usize,
    pub questions_per_paragraph: usize,
    pub seed: u64,
    pub bounds: LengthBounds,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            answer_source: AnswerSource::NamedEntity,
            boundary: Boundary::Subclause,
            method: TranslationMethod::Identity,
            wh_mode: WhMode::Heuristic,
            noise: NoiseConfig::default(),
            n_paragraphs: DEFAULT_DEV_PARAGRAPHS,
            questions_per_paragraph: 3,
            seed: 0,
            bounds: LengthBounds::default(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.noise.validate()?;
        if self.bounds.min_tokens > self.bounds.max_tokens {
            return Err(format!(
                "paragraph bounds are empty: min {} > max {}",
                self.bounds.min_tokens, self.bounds.max_tokens
            ));
        }
        Ok(())
    }
}

/// Where an example came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub doc_id: String,
    pub para_index: usize,
    pub boundary: Boundary,
    pub method: TranslationMethod,
    pub category: AnswerCategory,
    pub wh_word: WhWord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAExample {
    pub context: String,
    pub question: String,
    pub answer_text: String,
    pub answer_start: usize,
    pub id: String,
    pub title: String,
    pub provenance: Provenance,
}

/// Content hash of (context, question, answer_start): 24 hex digits.
pub fn example_id(context: &str, question: &str, answer_start: usize) -> String {
    let mut h = Sha256::new();
    h.update(context.as_bytes());
    h.update([0]);
    h.update(question.as_bytes());
    h.update([0]);
    h.update(answer_start.to_string().as_bytes());
    let digest = h.finalize();
    digest[..12]
        .iter()
        .fold(String::with_capacity(24), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

impl QAExample {
    fn new(paragraph: &Paragraph, cloze: &ClozeQuestion, question: &NaturalQuestion) -> Self {
        let answer = &cloze.answer;
        Self {
            id: example_id(&paragraph.text, &question.text, answer.char_start),
            context: paragraph.text.clone(),
            question: question.text.clone(),
            answer_text: answer.text.clone(),
            answer_start: answer.char_start,
            title: if paragraph.title.is_empty() {
                paragraph.doc_id.clone()
            } else {
                paragraph.title.clone()
            },
            provenance: Provenance {
                doc_id: paragraph.doc_id.clone(),
                para_index: paragraph.para_index,
                boundary: cloze.boundary,
                method: question.method,
                category: answer.category,
                wh_word: question.wh_word,
            },
        }
    }

    /// The answer substring invariant.
    pub fn is_consistent(&self) -> bool {
        let len = corpus::char_len(&self.answer_text);
        corpus::char_slice(&self.context, self.answer_start, self.answer_start + len)
            == Some(self.answer_text.as_str())
    }
}

/// Per-stage counters for one generation run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateReport {
    pub documents_seen: usize,
    pub paragraphs_seen: usize,
    pub paragraphs_eligible: usize,
    pub paragraphs_sampled: usize,
    pub paragraph_shortfall: usize,
    pub paragraphs_without_candidates: usize,
    pub candidates: usize,
    pub unmappable_labels: usize,
    pub cloze_attempts: usize,
    pub rejected_too_long: usize,
    pub rejected_crossing: usize,
    pub rejected_misaligned: usize,
    pub repaired_questions: usize,
    pub duplicate_ids: usize,
    pub examples: usize,
}

/// One answer that was turned into a cloze, or failed to be.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClozeAttempt {
    pub doc_id: String,
    pub para_index: usize,
    pub answer: AnswerSpan,
    pub rejected: Option<ClozeReject>,
}

#[derive(Debug, Clone, Default)]
pub struct Generated {
    pub examples: Vec<QAExample>,
    /// Accepted clozes, aligned with `examples` before duplicate removal.
    pub clozes: Vec<ClozeQuestion>,
    pub attempts: Vec<ClozeAttempt>,
    /// Sampled paragraphs, in corpus order.
    pub paragraphs: Vec<Paragraph>,
    pub report: GenerateReport,
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("the {0} needs a plug-in but none was given")]
    MissingPlugin(&'static str),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Plugin(#[from] PluginError),
    #[error("zero examples generated ({})", summarize(.0))]
    NoExamples(Box<GenerateReport>),
}

fn summarize(r: &GenerateReport) -> String {
    format!(
        "paragraphs sampled {}, without candidates {}, cloze attempts {}, too long {}, crossing {}, misaligned {}, duplicate ids {}",
        r.paragraphs_sampled,
        r.paragraphs_without_candidates,
        r.cloze_attempts,
        r.rejected_too_long,
        r.rejected_crossing,
        r.rejected_misaligned,
        r.duplicate_ids
    )
}

/// Optional external processes used by generation.
#[derive(Default)]
pub struct Plugins {
    pub tagger: Option<PluginTagger>,
    pub translator: Option<PluginTranslator>,
}

/// Sample paragraphs from a document stream, then generate from them.
pub fn generate<I>(
    docs: I,
    cfg: &GenConfig,
    plugins: &mut Plugins,
) -> Result<Generated, GenerateError>
where
    I: IntoIterator<Item = Result<Document, CorpusError>>,
{
    cfg.validate().map_err(GenerateError::Config)?;
    let sample = corpus::try_sample_paragraphs(docs, cfg.n_paragraphs, cfg.bounds, cfg.seed)?;
    let mut out = generate_from_paragraphs(sample.paragraphs, cfg, plugins);
    let report = match &mut out {
        Ok(g) => &mut g.report,
        Err(GenerateError::NoExamples(r)) => r.as_mut(),
        Err(_) => return out,
    };
    report.documents_seen = sample.documents_seen;
    report.paragraphs_seen = sample.paragraphs_seen;
    report.paragraphs_eligible = sample.eligible;
    report.paragraph_shortfall = sample.shortfall;
    out
}

struct ParagraphOutcome {
    candidates: usize,
    unmappable: usize,
    clozes: Vec<ClozeQuestion>,
    questions: Vec<NaturalQuestion>,
    attempts: Vec<ClozeAttempt>,
}

fn process_paragraph(
    paragraph: Paragraph,
    tags: Option<Vec<TaggedSpan>>,
    cfg: &GenConfig,
) -> ParagraphOutcome {
    let mut rng = seed::paragraph_rng(cfg.seed, &paragraph.doc_id, paragraph.para_index);
    let analyzed = AnalyzedParagraph::analyze(paragraph);
    let p = &analyzed.paragraph;
    let (mut pool, unmappable) = match cfg.answer_source {
        AnswerSource::NounPhrase => (extract_noun_phrases(p, &analyzed.tokens), 0),
        AnswerSource::NamedEntity => {
            let tagged = tags.unwrap_or_else(|| BuiltinTagger::tag_paragraph(p));
            let ex = entities_from_tags(p, tagged);
            (ex.spans, ex.unmappable)
        }
    };
    let mut out = ParagraphOutcome {
        candidates: pool.len(),
        unmappable,
        clozes: Vec::new(),
        questions: Vec::new(),
        attempts: Vec::new(),
    };
    // draw answers without replacement until enough clozes survive
    while out.clozes.len() < cfg.questions_per_paragraph && !pool.is_empty() {
        let answer = pool.remove(rng.gen_range(0..pool.len()));
        let result = make_cloze(
            p,
            &analyzed.sentences,
            &analyzed.tokens,
            &answer,
            cfg.boundary,
        );
        out.attempts.push(ClozeAttempt {
            doc_id: p.doc_id.clone(),
            para_index: p.para_index,
            answer,
            rejected: result.as_ref().err().copied(),
        });
        let Ok(cloze) = result else { continue };
        match cfg.method {
            TranslationMethod::Identity => {
                out.questions
                    .push(identity_translate(&cloze, cfg.wh_mode, &mut rng))
            }
            TranslationMethod::Noisy => {
                out.questions
                    .push(noisy_translate(&cloze, &cfg.noise, cfg.wh_mode, &mut rng))
            }
            TranslationMethod::External => {}
        }
        out.clozes.push(cloze);
    }
    out
}

const TAG_BATCH: usize = 256;

/// Generate from already sampled paragraphs. Paragraphs are processed in
/// parallel; each draws from its own rng so results do not depend on the
/// thread pool.
pub fn generate_from_paragraphs(
    paragraphs: Vec<Paragraph>,
    cfg: &GenConfig,
    plugins: &mut Plugins,
) -> Result<Generated, GenerateError> {
    cfg.validate().map_err(GenerateError::Config)?;
    if cfg.method == TranslationMethod::External && plugins.translator.is_none() {
        return Err(GenerateError::MissingPlugin("external translation method"));
    }

    let mut tags: Vec<Option<Vec<TaggedSpan>>> = vec![None; paragraphs.len()];
    if let (AnswerSource::NamedEntity, Some(tagger)) = (cfg.answer_source, plugins.tagger.as_mut())
    {
        for (chunk_idx, chunk) in paragraphs.chunks(TAG_BATCH).enumerate() {
            let refs: Vec<&Paragraph> = chunk.iter().collect();
            for (k, spans) in tagger.tag_batch(&refs)?.into_iter().enumerate() {
                tags[chunk_idx * TAG_BATCH + k] = Some(spans);
            }
        }
    }

    let outcomes: Vec<ParagraphOutcome> = paragraphs
        .par_iter()
        .cloned()
        .zip(tags.into_par_iter())
        .map(|(p, t)| process_paragraph(p, t, cfg))
        .collect();

    let mut g = Generated {
        report: GenerateReport {
            paragraphs_sampled: paragraphs.len(),
            ..Default::default()
        },
        ..Default::default()
    };
    let mut owners = Vec::new();
    let mut questions = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        let r = &mut g.report;
        r.candidates += o.candidates;
        r.unmappable_labels += o.unmappable;
        if o.candidates == 0 {
            r.paragraphs_without_candidates += 1;
        }
        for a in &o.attempts {
            r.cloze_attempts += 1;
            match a.rejected {
                Some(ClozeReject::TooLong { .. }) => r.rejected_too_long += 1,
                Some(ClozeReject::CrossesSentence) => r.rejected_crossing += 1,
                Some(ClozeReject::Misaligned) => r.rejected_misaligned += 1,
                None => {}
            }
        }
        owners.extend(std::iter::repeat_n(i, o.clozes.len()));
        g.clozes.extend(o.clozes);
        questions.extend(o.questions);
        g.attempts.extend(o.attempts);
    }

    if cfg.method == TranslationMethod::External {
        let translator = plugins.translator.as_mut().expect("checked above");
        let ext = external_translate(&g.clozes, translator)?;
        g.report.repaired_questions = ext.repaired;
        questions = ext.questions;
    }

    let mut seen = HashSet::new();
    for ((cloze, question), owner) in g.clozes.iter().zip(&questions).zip(&owners) {
        let ex = QAExample::new(&paragraphs[*owner], cloze, question);
        if seen.insert(ex.id.clone()) {
            g.examples.push(ex);
        } else {
            g.report.duplicate_ids += 1;
        }
    }
    g.report.examples = g.examples.len();
    g.paragraphs = paragraphs;
    if g.examples.is_empty() {
        return Err(GenerateError::NoExamples(Box::new(g.report)));
    }
    Ok(g)
}

// SQuAD v1.1 model.

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub version: String,
    pub data: Vec<Article>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub title: String,
    pub paragraphs: Vec<SquadParagraph>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquadParagraph {
    pub context: String,
    pub qas: Vec<Qa>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qa {
    pub id: String,
    pub question: String,
    pub answers: Vec<GoldAnswer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnswer {
    pub text: String,
    pub answer_start: usize,
}

impl Default for Dataset {
    fn default() -> Self {
        Self {
            version: "1.1".to_string(),
            data: Vec::new(),
        }
    }
}

impl Dataset {
    /// Group examples by source document and paragraph, keeping first
    /// appearance order.
    pub fn from_examples(examples: &[QAExample]) -> Self {
        let mut ds = Dataset::default();
        let mut articles: HashMap<&str, usize> = HashMap::new();
        let mut paras: HashMap<(&str, usize), usize> = HashMap::new();
        for ex in examples {
            let doc = ex.provenance.doc_id.as_str();
            let a = *articles.entry(doc).or_insert_with(|| {
                ds.data.push(Article {
                    title: ex.title.clone(),
                    paragraphs: Vec::new(),
                });
                ds.data.len() - 1
            });
            let article = &mut ds.data[a];
            let p = *paras
                .entry((doc, ex.provenance.para_index))
                .or_insert_with(|| {
                    article.paragraphs.push(SquadParagraph {
                        context: ex.context.clone(),
                        qas: Vec::new(),
                    });
                    article.paragraphs.len() - 1
                });
            article.paragraphs[p].qas.push(Qa {
                id: ex.id.clone(),
                question: ex.question.clone(),
                answers: vec![GoldAnswer {
                    text: ex.answer_text.clone(),
                    answer_start: ex.answer_start,
                }],
            });
        }
        ds
    }

    /// Every question with its context, in file order.
    pub fn questions(&self) -> impl Iterator<Item = (&str, &Qa)> {
        self.data
            .iter()
            .flat_map(|a| a.paragraphs.iter())
            .flat_map(|p| p.qas.iter().map(move |q| (p.context.as_str(), q)))
    }

    pub fn len(&self) -> usize {
        self.questions().count()
    }

    pub fn is_empty(&self) -> bool {
        self.questions().next().is_none()
    }

    pub fn duplicate_ids(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut dups = Vec::new();
        for (_, qa) in self.questions() {
            if !seen.insert(qa.id.as_str()) {
                dups.push(qa.id.clone());
            }
        }
        dups
    }

    /// Check every gold answer against its context.
    pub fn validate(&self) -> Result<(), SquadError> {
        for (i, article) in self.data.iter().enumerate() {
            for (j, para) in article.paragraphs.iter().enumerate() {
                let chars: Vec<char> = para.context.chars().collect();
                for (k, qa) in para.qas.iter().enumerate() {
                    for (m, gold) in qa.answers.iter().enumerate() {
                        let len = gold.text.chars().count();
                        let found: Option<String> = chars
                            .get(gold.answer_start..gold.answer_start + len)
                            .map(|s| s.iter().collect());
                        if found.as_deref() != Some(gold.text.as_str()) {
                            return Err(SquadError::AnswerMismatch {
                                path: format!("data[{i}].paragraphs[{j}].qas[{k}].answers[{m}]"),
                                id: qa.id.clone(),
                                expected: gold.text.clone(),
                                found,
                                answer_start: gold.answer_start,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SquadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{file}: at {json_path} (line {line}, column {column}): {message}")]
    Schema {
        file: String,
        json_path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("qa {id:?} at {path}: answer {expected:?} does not match context at {answer_start} (found {found:?})")]
    AnswerMismatch {
        path: String,
        id: String,
        expected: String,
        found: Option<String>,
        answer_start: usize,
    },
    #[error("refusing to write an empty dataset")]
    Empty,
    #[error("duplicate question ids: {}", .0.join(", "))]
    DuplicateIds(Vec<String>),
}

pub fn parse_squad(text: &str, file: &str) -> Result<Dataset, SquadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let ds: Dataset = serde_path_to_error::deserialize(de).map_err(|e| {
        let json_path = e.path().to_string();
        let inner = e.into_inner();
        SquadError::Schema {
            file: file.to_string(),
            json_path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    ds.validate()?;
    Ok(ds)
}

pub fn read_squad(path: &Path) -> Result<Dataset, SquadError> {
    let text = std::fs::read_to_string(path).map_err(|source| SquadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_squad(&text, &path.display().to_string())
}

pub fn write_squad(dataset: &Dataset, path: &Path) -> Result<(), SquadError> {
    if dataset.is_empty() {
        return Err(SquadError::Empty);
    }
    let dups = dataset.duplicate_ids();
    if !dups.is_empty() {
        return Err(SquadError::DuplicateIds(dups));
    }
    let io_err = |source| SquadError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    serde_json::to_writer(&mut w, dataset).map_err(|e| io_err(e.into()))?;
    w.write_all(b"\n").map_err(io_err)?;
    w.flush().map_err(io_err)
}

// Statistics.

/// Longest run of consecutive equal tokens shared by `a` and `b`.
pub fn longest_common_substring<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best = 0;
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionStats {
    pub id: String,
    pub tokens: usize,
    pub lcs_tokens: usize,
    pub lcs_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub n: usize,
    pub mean_question_tokens: f64,
    pub mean_lcs_tokens: f64,
    pub mean_lcs_fraction: f64,
    /// Count of questions by token length (bin width 1, index = length).
    pub length_histogram: Vec<usize>,
    /// Count of questions by longest common substring length.
    pub lcs_histogram: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_question: Vec<QuestionStats>,
}

fn lowered_tokens(text: &str) -> Vec<String> {
    corpus::tokenize(text)
        .into_iter()
        .map(|t| t.text.to_lowercase())
        .collect()
}

pub fn question_stats(id: &str, question: &str, context: &str) -> QuestionStats {
    let q = lowered_tokens(question);
    let lcs = longest_common_substring(&q, &lowered_tokens(context));
    QuestionStats {
        id: id.to_string(),
        tokens: q.len(),
        lcs_tokens: lcs,
        lcs_fraction: if q.is_empty() {
            0.0
        } else {
            lcs as f64 / q.len() as f64
        },
    }
}

fn bump(hist: &mut Vec<usize>, bin: usize) {
    if hist.len() <= bin {
        hist.resize(bin + 1, 0);
    }
    hist[bin] += 1;
}

/// Question length and question/context overlap, case-insensitive.
pub fn stats(dataset: &Dataset) -> StatsReport {
    let pairs: Vec<(&str, &Qa)> = dataset.questions().collect();
    let per_question: Vec<QuestionStats> = pairs
        .par_iter()
        .map(|(ctx, qa)| question_stats(&qa.id, &qa.question, ctx))
        .collect();
    let mut r = StatsReport {
        n: per_question.len(),
        ..Default::default()
    };
    for q in &per_question {
        r.mean_question_tokens += q.tokens as f64;
        r.mean_lcs_tokens += q.lcs_tokens as f64;
        r.mean_lcs_fraction += q.lcs_fraction;
        bump(&mut r.length_histogram, q.tokens);
        bump(&mut r.lcs_histogram, q.lcs_tokens);
    }
    if r.n > 0 {
        let n = r.n as f64;
        r.mean_question_tokens /= n;
        r.mean_lcs_tokens /= n;
        r.mean_lcs_fraction /= n;
    }
    r.per_question = per_question;
    r
}

impl StatsReport {
    /// Plain-text rendering of both histograms.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "questions: {}", self.n);
        let _ = writeln!(
            s,
            "mean question length: {:.2} tokens",
            self.mean_question_tokens
        );
        let _ = writeln!(
            s,
            "mean longest common substring with context: {:.2} tokens ({:.3} of question)",
            self.mean_lcs_tokens, self.mean_lcs_fraction
        );
        for (name, hist) in [
            ("question length", &self.length_histogram),
            ("common substring", &self.lcs_histogram),
        ] {
            let _ = writeln!(s, "\n{name}:");
            let peak = hist.iter().copied().max().unwrap_or(0).max(1);
            for (bin, &count) in hist.iter().enumerate() {
                let bar = "#".repeat((count * 50).div_ceil(peak));
                let _ = writeln!(s, "{bin:>4} {count:>7} {bar}");
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = "For many years the London Sevens was the last tournament of each season but the Paris Sevens became the last stop on the calendar in 2018.";

    fn fig1_docs() -> Vec<Result<Document, CorpusError>> {
        vec![Ok(Document::new("rugby", "Rugby", FIG1))]
    }

    fn small_cfg() -> GenConfig {
        GenConfig {
            n_paragraphs: 10,
            questions_per_paragraph: 20,
            bounds: LengthBounds::new(1, 550),
            ..Default::default()
        }
    }

    #[test]
    fn figure_one_identity_question() {
        let g = generate(fig1_docs(), &small_cfg(), &mut Plugins::default()).unwrap();
        let ex = g
            .examples
            .iter()
            .find(|e| e.answer_text == "2018")
            .expect("2018 sampled");
        assert_eq!(
            ex.question,
            "the Paris Sevens became the last stop on the calendar in When ?"
        );
        assert_eq!(ex.answer_start, FIG1.find("2018").unwrap());
        assert_eq!(ex.provenance.category, AnswerCategory::Temporal);
        assert!(g.examples.iter().all(QAExample::is_consistent));
    }

    #[test]
    fn zero_paragraphs_fails() {
        let cfg = GenConfig {
            n_paragraphs: 0,
            ..small_cfg()
        };
        match generate(fig1_docs(), &cfg, &mut Plugins::default()) {
            Err(GenerateError::NoExamples(r)) => assert_eq!(r.paragraphs_sampled, 0),
            other => panic!("expected NoExamples, got {other:?}"),
        }
    }

    #[test]
    fn external_without_plugin_refused() {
        let cfg = GenConfig {
            method: TranslationMethod::External,
            ..small_cfg()
        };
        assert!(matches!(
            generate(fig1_docs(), &cfg, &mut Plugins::default()),
            Err(GenerateError::MissingPlugin(_))
        ));
    }

    fn corpus() -> Vec<Document> {
        (0..30)
            .map(|i| {
                Document::new(
                    format!("d{i}"),
                    "",
                    format!(
                        "The council of Lyon met in {} to discuss the bridge. \
                         Anna Berg said the river was rising, and the old mill closed after {} days.\n\
                         Second paragraph about {} people who visited Paris in May.",
                        1900 + i,
                        i + 2,
                        100 + i
                    ),
                )
            })
            .collect()
    }

    #[test]
    fn deterministic_and_pool_independent() {
        let cfg = GenConfig {
            n_paragraphs: 40,
            bounds: LengthBounds::new(1, 550),
            method: TranslationMethod::Noisy,
            ..Default::default()
        };
        let run = || {
            let g = generate(corpus().into_iter().map(Ok), &cfg, &mut Plugins::default()).unwrap();
            serde_json::to_string(&Dataset::from_examples(&g.examples)).unwrap()
        };
        let a = run();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(run);
        assert_eq!(a, b);
    }

    #[test]
    fn report_counts_attempts() {
        let cfg = GenConfig {
            n_paragraphs: 60,
            answer_source: AnswerSource::NounPhrase,
            bounds: LengthBounds::new(1, 550),
            ..Default::default()
        };
        let g = generate(corpus().into_iter().map(Ok), &cfg, &mut Plugins::default()).unwrap();
        let r = &g.report;
        assert_eq!(r.paragraphs_sampled, 60);
        assert_eq!(r.cloze_attempts, g.attempts.len());
        let rejected = g.attempts.iter().filter(|a| a.rejected.is_some()).count();
        assert_eq!(
            rejected,
            r.rejected_too_long + r.rejected_crossing + r.rejected_misaligned
        );
        assert_eq!(g.clozes.len(), r.cloze_attempts - rejected);
        assert!(g
            .examples
            .iter()
            .all(|e| !e.answer_text.is_empty() && e.is_consistent()));
    }

    fn one_example() -> QAExample {
        let g = generate(fig1_docs(), &small_cfg(), &mut Plugins::default()).unwrap();
        g.examples[0].clone()
    }

    #[test]
    fn squad_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        let ds = Dataset::from_examples(&[one_example()]);
        write_squad(&ds, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["version"], "1.1");
        assert!(v["data"][0]["paragraphs"][0]["qas"][0]["answers"][0]["answer_start"].is_u64());
        assert_eq!(read_squad(&path).unwrap(), ds);
    }

    #[test]
    fn write_refuses_bad_datasets() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        assert!(matches!(
            write_squad(&Dataset::default(), &path),
            Err(SquadError::Empty)
        ));
        let ex = one_example();
        let ds = Dataset::from_examples(&[ex.clone(), ex]);
        assert!(matches!(
            write_squad(&ds, &path),
            Err(SquadError::DuplicateIds(_))
        ));
    }

    #[test]
    fn read_reports_positions_and_ids() {
        let ds = Dataset::from_examples(&[one_example()]);
        let text = serde_json::to_string(&ds).unwrap();
        match parse_squad(&text[..text.len() / 2], "t.json") {
            Err(SquadError::Schema { line, column, .. }) => assert!(line >= 1 && column > 0),
            other => panic!("{other:?}"),
        }
        let mut bad = ds.clone();
        bad.data[0].paragraphs[0].qas[0].answers[0].answer_start += 1;
        let id = bad.data[0].paragraphs[0].qas[0].id.clone();
        match parse_squad(&serde_json::to_string(&bad).unwrap(), "t.json") {
            Err(e @ SquadError::AnswerMismatch { .. }) => assert!(e.to_string().contains(&id)),
            other => panic!("{other:?}"),
        }
        let wrong = r#"{"version":"1.1","data":[{"title":"t","paragraphs":[{"context":"c","qas":[{"id":"x","question":"q","answers":[{"text":"c","answer_start":"0"}]}]}]}]}"#;
        match parse_squad(wrong, "t.json") {
            Err(SquadError::Schema { json_path, .. }) => {
                assert_eq!(
                    json_path,
                    "data[0].paragraphs[0].qas[0].answers[0].answer_start"
                )
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn multiple_golds_and_unicode_offsets() {
        let text = r#"{"version":"1.1","data":[{"title":"t","paragraphs":[{"context":"Café in Zürich","qas":[{"id":"x","question":"q","answers":[{"text":"Zürich","answer_start":8},{"text":"Café","answer_start":0}]}]}]}]}"#;
        let ds = parse_squad(text, "t.json").unwrap();
        assert_eq!(ds.data[0].paragraphs[0].qas[0].answers.len(), 2);
    }

    fn brute_lcs(a: &[&str], b: &[&str]) -> usize {
        let mut best = 0;
        for i in 0..a.len() {
            for j in 0..b.len() {
                let mut k = 0;
                while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                    k += 1;
                }
                best = best.max(k);
            }
        }
        best
    }

    #[test]
    fn lcs_examples() {
        let s = question_stats(
            "q",
            "When did the Paris Sevens become the last stop ?",
            FIG1,
        );
        let q: Vec<String> = lowered_tokens("When did the Paris Sevens become the last stop ?");
        let c: Vec<String> = lowered_tokens(FIG1);
        let qr: Vec<&str> = q.iter().map(String::as_str).collect();
        let cr: Vec<&str> = c.iter().map(String::as_str).collect();
        assert_eq!(brute_lcs(&qr, &cr), 3);
        assert_eq!(s.lcs_tokens, 3);
        assert_eq!(s.tokens, 10);

        let copy = question_stats(
            "q",
            "the old mill closed after two days .",
            "Then the old mill closed after two days . Fine.",
        );
        assert_eq!(
            (copy.lcs_tokens, copy.tokens, copy.lcs_fraction),
            (8, 8, 1.0)
        );
        assert_eq!(
            question_stats("q", "zebra ?", "no overlap here").lcs_tokens,
            0
        );
    }

    #[test]
    fn stats_histograms() {
        let g = generate(
            corpus().into_iter().map(Ok),
            &GenConfig {
                n_paragraphs: 20,
                bounds: LengthBounds::new(1, 550),
                ..Default::default()
            },
            &mut Plugins::default(),
        )
        .unwrap();
        let ds = Dataset::from_examples(&g.examples);
        let r = stats(&ds);
        assert_eq!(r.n, ds.len());
        assert_eq!(r.length_histogram.iter().sum::<usize>(), r.n);
        assert_eq!(r.lcs_histogram.iter().sum::<usize>(), r.n);
        assert!(r.mean_lcs_fraction > 0.0 && r.mean_lcs_fraction <= 1.0);
        assert!(r.render_text().contains("question length"));
    }

    proptest::proptest! {
        #[test]
        fn lcs_matches_brute_force(a in proptest::collection::vec(0u8..4, 0..12), b in proptest::collection::vec(0u8..4, 0..12)) {
            let sa: Vec<String> = a.iter().map(|x| x.to_string()).collect();
            let sb: Vec<String> = b.iter().map(|x| x.to_string()).collect();
            let ra: Vec<&str> = sa.iter().map(String::as_str).collect();
            let rb: Vec<&str> = sb.iter().map(String::as_str).collect();
            proptest::prop_assert_eq!(longest_common_substring(&ra, &rb), brute_lcs(&ra, &rb));
        }
    }
}
