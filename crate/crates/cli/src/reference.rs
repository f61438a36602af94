//! Reference plug-ins speaking the JSONL protocols. They let the external
//! code paths run without third-party models.

use std::io::{self, BufRead, Write};

use anyhow::Context;
use cloze_forge::answers::BuiltinTagger;
use cloze_forge::eval::f1_score;
use cloze_forge::plugin::{TagRequest, TagResponse, TranslateRequest, TranslateResponse, WireSpan};
use cloze_forge::{AnswerCategory, Paragraph, WhWord};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn serve<Req, Resp>(mut handle: impl FnMut(Req) -> Resp) -> anyhow::Result<()>
where
    Req: DeserializeOwned,
    Resp: Serialize,
{
    let stdin = io::stdin().lock();
    let mut stdout = io::stdout().lock();
    for (i, line) in stdin.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req: Req =
            serde_json::from_str(&line).with_context(|| format!("request line {}", i + 1))?;
        serde_json::to_writer(&mut stdout, &handle(req))?;
        stdout.write_all(b"\n")?;
        stdout.flush()?;
    }
    Ok(())
}

pub fn builtin_tagger() -> anyhow::Result<()> {
    serve(|req: TagRequest| {
        let spans = BuiltinTagger::tag_paragraph(&Paragraph::new("", 0, req.text))
            .into_iter()
            .map(|s| WireSpan {
                start: s.char_start,
                end: s.char_end,
                label: s.label,
            })
            .collect();
        TagResponse { id: req.id, spans }
    })
}

fn heuristic_wh(category: Option<AnswerCategory>) -> WhWord {
    match category {
        Some(AnswerCategory::PersonNorpOrg) => WhWord::Who,
        Some(AnswerCategory::Place) => WhWord::Where,
        Some(AnswerCategory::Temporal) => WhWord::When,
        Some(AnswerCategory::Numeric) => WhWord::HowMany,
        _ => WhWord::What,
    }
}

/// Replace the mask token with the category's wh-word and append "?".
/// When the request carries a question, also score it by lexical F1.
pub fn echo_translator() -> anyhow::Result<()> {
    serve(|req: TranslateRequest| {
        let category = AnswerCategory::parse(&req.category);
        let wh = heuristic_wh(category);
        let mask = match category {
            Some(AnswerCategory::Generic) | None => "MASK",
            Some(c) => c.as_str(),
        };
        let mut words: Vec<&str> = req
            .cloze
            .split_whitespace()
            .map(|w| if w == mask { wh.as_str() } else { w })
            .collect();
        words.push("?");
        let question = words.join(" ");
        let score = req.question.as_deref().map(|q| f1_score(q, &question));
        TranslateResponse {
            id: req.id,
            question,
            score,
        }
    })
}
