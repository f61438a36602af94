//! Deterministic pattern and gazetteer entity tagger. A desk-scale stand-in
//! for a statistical NER system; plug-ins can replace it.

use std::collections::HashSet;
use std::sync::OnceLock;

use super::{pos, resolve_overlaps, SpanTagger, TaggedSpan};
use crate::corpus::{self, Paragraph, Token};
use crate::plugin::PluginError;

const GIVEN_NAMES: &str = include_str!("../../data/given_names.txt");
const PLACES: &str = include_str!("../../data/places.txt");
const NATIONALITIES: &str = include_str!("../../data/nationalities.txt");

const MONTHS: &[&str] = &[
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];
const WEEKDAYS: &[&str] = &[
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
];
const CURRENCY_SYMBOLS: &[&str] = &["$", "£", "€", "¥"];
const CURRENCY_WORDS: &[&str] = &[
    "dollars", "dollar", "euros", "euro", "yen", "cents", "francs", "rupees",
];
const SCALE_WORDS: &[&str] = &["thousand", "million", "billion", "trillion", "hundred"];
const UNIT_WORDS: &[&str] = &[
    "km",
    "kilometres",
    "kilometers",
    "miles",
    "mile",
    "metres",
    "meters",
    "metre",
    "meter",
    "feet",
    "foot",
    "inches",
    "kg",
    "kilograms",
    "tonnes",
    "tons",
    "pounds",
    "acres",
    "hectares",
    "square",
    "litres",
    "liters",
    "degrees",
];
const ORDINAL_WORDS: &[&str] = &[
    "first",
    "second",
    "third",
    "fourth",
    "fifth",
    "sixth",
    "seventh",
    "eighth",
    "ninth",
    "tenth",
    "eleventh",
    "twelfth",
    "twentieth",
    "hundredth",
];
const TITLES: &[&str] = &[
    "Mr",
    "Mrs",
    "Ms",
    "Dr",
    "Prof",
    "Sir",
    "Dame",
    "Lord",
    "Lady",
    "King",
    "Queen",
    "Prince",
    "Princess",
    "President",
    "Senator",
    "General",
    "Captain",
    "Pope",
    "Saint",
    "Bishop",
];
const CONNECTORS: &[&str] = &["of", "de", "da", "del", "van", "von", "&"];
const ORG_WORDS: &[&str] = &[
    "University",
    "Company",
    "Inc",
    "Corporation",
    "Corp",
    "Association",
    "Party",
    "Church",
    "Club",
    "Council",
    "Committee",
    "Institute",
    "College",
    "School",
    "Museum",
    "Bank",
    "Ministry",
    "Department",
    "Agency",
    "League",
    "Group",
    "Society",
    "Foundation",
    "Army",
    "Navy",
    "Court",
    "Union",
    "Parliament",
    "Congress",
    "Ltd",
    "Records",
    "Airlines",
];
const EVENT_WORDS: &[&str] = &[
    "War",
    "Olympics",
    "Championship",
    "Championships",
    "Cup",
    "Festival",
    "Revolution",
    "Games",
    "Battle",
    "Sevens",
    "Tournament",
    "Crisis",
];
const LOC_WORDS: &[&str] = &[
    "River",
    "Mountains",
    "Mountain",
    "Ocean",
    "Sea",
    "Lake",
    "Island",
    "Islands",
    "Valley",
    "Desert",
    "Bay",
    "Gulf",
    "Peninsula",
    "Coast",
    "Forest",
];
const FAC_WORDS: &[&str] = &[
    "Street",
    "Bridge",
    "Airport",
    "Stadium",
    "Tower",
    "Cathedral",
    "Palace",
    "Castle",
    "Station",
    "Square",
    "Road",
    "Avenue",
    "Park",
    "Hall",
    "Temple",
    "Abbey",
];

struct Gazetteer {
    given_names: HashSet<&'static str>,
    places: HashSet<&'static str>,
    nationalities: HashSet<&'static str>,
}

fn load_list(raw: &'static str) -> HashSet<&'static str> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn gazetteer() -> &'static Gazetteer {
    static GAZ: OnceLock<Gazetteer> = OnceLock::new();
    GAZ.get_or_init(|| Gazetteer {
        given_names: load_list(GIVEN_NAMES),
        places: load_list(PLACES),
        nationalities: load_list(NATIONALITIES),
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinTagger;

impl SpanTagger for BuiltinTagger {
    fn name(&self) -> &str {
        "builtin"
    }

    fn tag(&mut self, paragraph: &Paragraph) -> Result<Vec<TaggedSpan>, PluginError> {
        Ok(Self::tag_paragraph(paragraph))
    }
}

fn is_number(tok: &str) -> bool {
    tok.starts_with(|c: char| c.is_ascii_digit())
        && tok
            .chars()
            .all(|c| c.is_ascii_digit() || c == ',' || c == '.')
}

fn integer_value(tok: &str) -> Option<u32> {
    if tok.chars().all(|c| c.is_ascii_digit()) && tok.len() <= 9 {
        tok.parse().ok()
    } else {
        None
    }
}

fn is_year(tok: &str) -> bool {
    tok.len() == 4 && integer_value(tok).is_some_and(|y| (1000..=2100).contains(&y))
}

fn is_decade(tok: &str) -> bool {
    tok.len() == 5 && tok.ends_with('s') && is_year(&tok[..4])
}

fn is_day(tok: &str) -> bool {
    tok.len() <= 2 && integer_value(tok).is_some_and(|d| (1..=31).contains(&d))
}

fn is_ordinal_numeral(tok: &str) -> bool {
    let digits = tok.trim_end_matches(|c: char| c.is_ascii_alphabetic());
    let suffix = &tok[digits.len()..];
    !digits.is_empty()
        && digits.chars().all(|c| c.is_ascii_digit())
        && matches!(suffix, "st" | "nd" | "rd" | "th")
}

fn is_capitalized(tok: &str) -> bool {
    tok.chars().next().is_some_and(char::is_uppercase) && tok.chars().any(char::is_alphabetic)
}

fn in_list(list: &[&str], tok: &str) -> bool {
    list.contains(&tok)
}

struct Scan<'a> {
    text: &'a str,
    tokens: &'a [Token],
    sentence_start: Vec<bool>,
    spans: Vec<TaggedSpan>,
}

impl<'a> Scan<'a> {
    fn tok(&self, i: usize) -> Option<&'a str> {
        self.tokens.get(i).map(|t| t.text.as_str())
    }

    fn lower(&self, i: usize) -> Option<String> {
        self.tok(i).map(str::to_lowercase)
    }

    fn emit(&mut self, start: usize, end: usize, label: &str) {
        self.spans.push(TaggedSpan {
            char_start: self.tokens[start].char_start,
            char_end: self.tokens[end - 1].char_end,
            label: label.to_string(),
        });
    }

    /// Extend past scale words ("86 million") starting at `end`.
    fn scale_end(&self, mut end: usize) -> usize {
        while self.lower(end).is_some_and(|w| in_list(SCALE_WORDS, &w)) {
            end += 1;
        }
        end
    }

    fn numeric(&mut self, i: usize) {
        let tok = self.tokens[i].text.as_str();
        if in_list(CURRENCY_SYMBOLS, tok) {
            if self.tok(i + 1).is_some_and(is_number) {
                let end = self.scale_end(i + 2);
                self.emit(i, end, "MONEY");
            }
            return;
        }
        if is_decade(tok) {
            self.emit(i, i + 1, "DATE");
            return;
        }
        if is_ordinal_numeral(tok) || in_list(ORDINAL_WORDS, &tok.to_lowercase()) && i > 0 {
            self.emit(i, i + 1, "ORDINAL");
            return;
        }
        let lower = tok.to_lowercase();
        let numeric_word =
            pos::is_number_word(&lower) && lower != "one" && !in_list(SCALE_WORDS, &lower);
        if !is_number(tok) && !numeric_word {
            return;
        }
        let end = self.scale_end(i + 1);
        let next = self.lower(end);
        match next.as_deref() {
            Some("%") | Some("percent") => self.emit(i, end + 1, "PERCENT"),
            Some("per") if self.lower(end + 1).as_deref() == Some("cent") => {
                self.emit(i, end + 2, "PERCENT")
            }
            Some(w) if in_list(CURRENCY_WORDS, w) => self.emit(i, end + 1, "MONEY"),
            Some(w) if in_list(UNIT_WORDS, w) => self.emit(i, end + 1, "QUANTITY"),
            _ if end == i + 1 && is_year(tok) => self.emit(i, i + 1, "DATE"),
            _ => self.emit(i, end, "CARDINAL"),
        }
    }

    /// `[day] Month [day][,] [year]`, or a bare weekday.
    fn date(&mut self, i: usize) -> bool {
        let tok = self.tokens[i].text.as_str();
        if in_list(WEEKDAYS, tok) {
            self.emit(i, i + 1, "DATE");
            return true;
        }
        if !in_list(MONTHS, tok) {
            return false;
        }
        // "May" at a sentence start is more likely the modal verb
        if tok == "May" && self.sentence_start[i] {
            return false;
        }
        let start = if i > 0 && self.tok(i - 1).is_some_and(is_day) {
            i - 1
        } else {
            i
        };
        let mut end = i + 1;
        if self.tok(end).is_some_and(is_day) {
            end += 1;
        }
        if self.tok(end) == Some(",") && self.tok(end + 1).is_some_and(is_year) {
            end += 2;
        } else if self.tok(end).is_some_and(is_year) {
            end += 1;
        }
        self.emit(start, end, "DATE");
        true
    }

    fn is_run_token(&self, i: usize) -> bool {
        self.tok(i).is_some_and(|t| {
            is_capitalized(t) && !in_list(MONTHS, t) && !in_list(WEEKDAYS, t) && t != "I"
        })
    }

    /// Capitalized token sequence starting at `i`; returns its end.
    fn run_end(&self, i: usize) -> usize {
        let mut end = i + 1;
        loop {
            if self.is_run_token(end) {
                end += 1;
                continue;
            }
            let glue = self.tok(end).is_some_and(|t| {
                in_list(CONNECTORS, t)
                    || t == "-" && self.tokens[end - 1].char_end == self.tokens[end].char_start
            });
            if glue && self.is_run_token(end + 1) {
                end += 2;
                continue;
            }
            return end;
        }
    }

    fn preceded_by_title(&self, i: usize) -> bool {
        match (
            i.checked_sub(1).and_then(|j| self.tok(j)),
            i.checked_sub(2).and_then(|j| self.tok(j)),
        ) {
            (Some("."), Some(t)) => in_list(TITLES, t),
            (Some(t), _) => in_list(TITLES, t),
            _ => false,
        }
    }

    fn proper_run(&mut self, i: usize) -> usize {
        let mut start = i;
        let mut end = self.run_end(i);
        let gaz = gazetteer();
        // an abbreviated title on its own ("Dr.") belongs to the next run
        if end == start + 1
            && in_list(TITLES, &self.tokens[start].text)
            && self.tok(end) == Some(".")
        {
            return end;
        }
        if self.sentence_start[start] {
            let first = self.tokens[start].text.to_lowercase();
            if pos::is_common_word(&first) {
                start += 1;
                if start < end && self.tok(start).is_some_and(|t| in_list(CONNECTORS, t)) {
                    start += 1;
                }
                if start >= end {
                    return end;
                }
            } else if end - start == 1 {
                let t = self.tokens[start].text.as_str();
                if !gaz.places.contains(t) && !gaz.nationalities.contains(t) {
                    return end;
                }
            }
        }
        let mut person_by_title = self.preceded_by_title(start);
        if end - start > 1 && in_list(TITLES, &self.tokens[start].text) {
            start += 1;
            person_by_title = true;
        }
        // trailing connector never ends a run
        while end > start + 1 && self.tok(end - 1).is_some_and(|t| in_list(CONNECTORS, t)) {
            end -= 1;
        }
        let words: Vec<&str> = (start..end).map(|k| self.tokens[k].text.as_str()).collect();
        let phrase = &self.text[self.tokens[start].byte_start..self.tokens[end - 1].byte_end];
        let last = *words.last().expect("non-empty run");
        let label = if gaz.places.contains(phrase) {
            "GPE"
        } else if words.len() == 1
            && (gaz.nationalities.contains(phrase)
                || gaz.nationalities.contains(phrase.trim_end_matches('s')))
        {
            "NORP"
        } else if person_by_title || gaz.given_names.contains(words[0]) && words.len() <= 3 {
            "PERSON"
        } else if words.iter().any(|w| in_list(ORG_WORDS, w)) {
            "ORG"
        } else if in_list(LOC_WORDS, last) || words[0] == "Mount" || words[0] == "Lake" {
            "LOC"
        } else if in_list(FAC_WORDS, last) {
            "FAC"
        } else if words.iter().any(|w| in_list(EVENT_WORDS, w)) {
            "EVENT"
        } else {
            "ORG"
        };
        self.emit(start, end, label);
        end
    }
}

impl BuiltinTagger {
    pub fn tag_paragraph(paragraph: &Paragraph) -> Vec<TaggedSpan> {
        let tokens = corpus::tokenize(&paragraph.text);
        let sentences = corpus::split_sentences(paragraph, &tokens);
        let mut sentence_start = vec![false; tokens.len()];
        for s in &sentences {
            sentence_start[s.token_range.start] = true;
            // a sentence opening with a quote or bracket starts at the next token
            if tokens[s.token_range.start].is_punct() && s.token_range.len() > 1 {
                sentence_start[s.token_range.start + 1] = true;
            }
        }
        let mut scan = Scan {
            text: &paragraph.text,
            tokens: &tokens,
            sentence_start,
            spans: Vec::new(),
        };
        let mut i = 0;
        while i < tokens.len() {
            if scan.date(i) {
                i += 1;
                continue;
            }
            if scan.is_run_token(i) {
                i = scan.proper_run(i);
                continue;
            }
            scan.numeric(i);
            i += 1;
        }
        resolve_overlaps(scan.spans)
    }
}
