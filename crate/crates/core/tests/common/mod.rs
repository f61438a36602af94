//! Seeded synthetic corpus for end-to-end checks. Sentences are built from
//! clause templates mixing people, places, organisations, dates, amounts
//! and plain noun phrases, joined by clause connectors so that sentence and
//! sub-clause boundaries differ and some sentences exceed the cloze limit.

#![allow(dead_code)]

use cloze_forge::seed::{derive_seed, rng_from_seed, Rng};
use cloze_forge::Document;
use rand::seq::SliceRandom;
use rand::Rng as _;

const GIVEN: &[&str] = &[
    "Anna", "John", "Maria", "Peter", "Laura", "David", "Helen", "Carlos", "Emma", "George",
];
const SURNAMES: &[&str] = &[
    "Berg",
    "Novak",
    "Silva",
    "Moreau",
    "Okafor",
    "Lindqvist",
    "Tanaka",
    "Kowalski",
];
const PLACES: &[&str] = &[
    "Paris", "London", "Rome", "Vienna", "Berlin", "Cairo", "Lisbon", "Prague", "Dublin", "Athens",
    "Madrid", "Boston",
];
const ORGS: &[&str] = &[
    "the Royal Museum",
    "the Harbor Company",
    "the National Bank",
    "the Trade Union",
    "the City Council",
    "the Science Institute",
];
const EVENTS: &[&str] = &[
    "the Paris Sevens",
    "the London Sevens",
    "the Summer Festival",
    "the Winter Games",
];
const ADJS: &[&str] = &[
    "old", "new", "large", "small", "ancient", "famous", "local", "northern", "public", "main",
];
const NOUNS: &[&str] = &[
    "bridge", "harbor", "library", "market", "tower", "garden", "railway", "station", "theatre",
    "factory", "river", "canal", "school", "road", "castle", "church", "village", "museum", "mill",
    "fountain",
];
const PLURALS: &[&str] = &[
    "lamps",
    "ships",
    "houses",
    "workers",
    "books",
    "trees",
    "students",
    "paintings",
];
const VERBS: &[&str] = &[
    "visited",
    "opened",
    "founded",
    "signed",
    "reported",
    "moved",
    "announced",
    "restored",
    "purchased",
    "described",
    "crossed",
    "painted",
    "repaired",
    "designed",
    "funded",
    "expanded",
];
const MONTHS: &[&str] = &[
    "January", "March", "April", "June", "August", "October", "November", "December",
];
const CONNECTORS: &[&str] = &[
    ", and",
    " but",
    " while",
    " because",
    " although",
    " after",
    ";",
];

fn pick<'a>(rng: &mut Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty list")
}

fn noun_phrase(rng: &mut Rng) -> String {
    if rng.gen_bool(0.5) {
        format!("the {} {}", pick(rng, ADJS), pick(rng, NOUNS))
    } else {
        format!("the {}", pick(rng, NOUNS))
    }
}

fn subject(rng: &mut Rng) -> String {
    match rng.gen_range(0..5) {
        0 => format!("{} {}", pick(rng, GIVEN), pick(rng, SURNAMES)),
        1 => pick(rng, ORGS).to_string(),
        2 => format!("the council of {}", pick(rng, PLACES)),
        3 => pick(rng, GIVEN).to_string(),
        _ => noun_phrase(rng),
    }
}

fn object(rng: &mut Rng) -> String {
    match rng.gen_range(0..6) {
        0 => format!("${} million", rng.gen_range(2..900)),
        1 => format!("{} new {}", rng.gen_range(3..500), pick(rng, PLURALS)),
        2 => pick(rng, PLACES).to_string(),
        3 => pick(rng, EVENTS).to_string(),
        _ => noun_phrase(rng),
    }
}

fn adjunct(rng: &mut Rng) -> String {
    match rng.gen_range(0..8) {
        0 | 1 => format!("in {}", rng.gen_range(1800..2021)),
        2 => format!(
            "on {} {}, {}",
            pick(rng, MONTHS),
            rng.gen_range(1..29),
            rng.gen_range(1800..2021)
        ),
        3 => format!("in {}", pick(rng, PLACES)),
        4 => format!("near {}", noun_phrase(rng)),
        5 => format!("for {} days", rng.gen_range(2..90)),
        6 => format!("with {} percent of the vote", rng.gen_range(5..95)),
        _ => "during the 1990s".to_string(),
    }
}

fn clause(rng: &mut Rng) -> String {
    let mut parts = vec![subject(rng), pick(rng, VERBS).to_string(), object(rng)];
    for _ in 0..rng.gen_range(0..3) {
        parts.push(adjunct(rng));
    }
    parts.join(" ")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn sentence(rng: &mut Rng) -> String {
    let mut s = clause(rng);
    // mostly short sentences, a tail of very long ones
    let extra = match rng.gen_range(0..10) {
        0..=3 => 0,
        4..=7 => 1,
        8 => 2,
        _ => rng.gen_range(3..6),
    };
    for _ in 0..extra {
        s.push_str(pick(rng, CONNECTORS));
        s.push(' ');
        s.push_str(&clause(rng));
    }
    format!("{}.", capitalize(&s))
}

fn paragraph(rng: &mut Rng) -> String {
    let n = rng.gen_range(4..9);
    (0..n).map(|_| sentence(rng)).collect::<Vec<_>>().join(" ")
}

/// `n_docs` documents with 1 to 3 paragraphs each.
pub fn synthetic_corpus(n_docs: usize, seed: u64) -> Vec<Document> {
    let mut rng = rng_from_seed(derive_seed(seed, &[b"synthetic-corpus"]));
    (0..n_docs)
        .map(|i| {
            let paras: Vec<String> = (0..rng.gen_range(1..4))
                .map(|_| paragraph(&mut rng))
                .collect();
            Document::new(
                format!("doc-{i:05}"),
                format!("Synthetic {i}"),
                paras.join("\n"),
            )
        })
        .collect()
}

/// Documents that together hold at least `n_paragraphs` paragraphs.
pub fn corpus_with_paragraphs(n_paragraphs: usize, seed: u64) -> Vec<Document> {
    let mut docs = synthetic_corpus(n_paragraphs / 2 + 1, seed);
    while docs.iter().map(|d| d.paragraphs().len()).sum::<usize>() < n_paragraphs {
        let more = synthetic_corpus(n_paragraphs / 4 + 1, seed.wrapping_add(docs.len() as u64));
        let base = docs.len();
        docs.extend(
            more.into_iter()
                .enumerate()
                .map(|(k, d)| Document::new(format!("doc-{:05}", base + k), d.title, d.text)),
        );
    }
    docs
}
