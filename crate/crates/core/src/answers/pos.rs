//! Built-in coarse part-of-speech tagger: closed-class lexicons, a handful of
//! suffix rules and one-token left context. Good enough to drive the noun
//! phrase chunk grammar and the verb test of the sub-clause splitter.

use std::collections::HashSet;
use std::sync::OnceLock;

use crate::corpus::{CoarsePos, Token};

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "his", "her", "its", "their", "our", "my",
    "your", "some", "any", "each", "every", "no", "all", "both", "either", "neither", "another",
    "such", "whose",
];

const FUNCTION_WORDS: &[&str] = &[
    // pronouns
    "i",
    "me",
    "you",
    "he",
    "him",
    "she",
    "it",
    "we",
    "us",
    "they",
    "them",
    "myself",
    "himself",
    "herself",
    "itself",
    "themselves",
    "who",
    "whom",
    "which",
    "what",
    "there",
    "here",
    "someone",
    "anyone",
    "everyone",
    "something",
    "nothing",
    "everything",
    // prepositions
    "of",
    "in",
    "on",
    "at",
    "by",
    "for",
    "with",
    "from",
    "to",
    "into",
    "onto",
    "upon",
    "about",
    "above",
    "below",
    "under",
    "over",
    "between",
    "among",
    "through",
    "during",
    "before",
    "after",
    "since",
    "until",
    "till",
    "within",
    "without",
    "against",
    "toward",
    "towards",
    "across",
    "along",
    "around",
    "behind",
    "beyond",
    "near",
    "as",
    "than",
    "via",
    "per",
    "despite",
    "throughout",
    "including",
    "following",
    "like",
    // conjunctions
    "and",
    "or",
    "but",
    "nor",
    "so",
    "yet",
    "because",
    "although",
    "though",
    "while",
    "whereas",
    "if",
    "unless",
    "whether",
    "when",
    "where",
    "why",
    "how",
    // adverbs and particles
    "then",
    "also",
    "not",
    "n't",
    "very",
    "too",
    "only",
    "just",
    "even",
    "still",
    "already",
    "often",
    "always",
    "never",
    "sometimes",
    "again",
    "however",
    "thus",
    "therefore",
    "hence",
    "soon",
    "now",
    "once",
    "twice",
    "ever",
    "almost",
    "quite",
    "rather",
    "perhaps",
    "well",
    "back",
    "away",
    "up",
    "down",
    "out",
    "off",
    "instead",
    "later",
    "together",
    "yes",
];

const VERBS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "having", "do",
    "does", "did", "done", "doing", "will", "would", "can", "could", "may", "might", "shall",
    "should", "must", "became", "become", "becomes", "said", "says", "say", "made", "make",
    "makes", "went", "go", "goes", "gone", "came", "come", "comes", "took", "take", "takes",
    "taken", "gave", "give", "gives", "given", "got", "get", "gets", "found", "find", "finds",
    "knew", "know", "knows", "known", "thought", "think", "thinks", "saw", "see", "sees", "seen",
    "told", "tell", "tells", "began", "begin", "begins", "begun", "left", "leave", "leaves",
    "held", "hold", "holds", "brought", "bring", "brings", "built", "build", "builds", "led",
    "lead", "leads", "won", "win", "wins", "lost", "lose", "loses", "ran", "run", "runs", "wrote",
    "write", "writes", "written", "sold", "sell", "sells", "bought", "buy", "buys", "paid", "pay",
    "pays", "met", "meet", "meets", "sent", "send", "sends", "spent", "spend", "stood", "stand",
    "stands", "fell", "fall", "falls", "felt", "feel", "feels", "kept", "keep", "keeps", "grew",
    "grow", "grows", "grown", "showed", "show", "shows", "shown", "put", "puts", "includes",
    "include", "contains", "contain", "remains", "remain", "serves", "serve", "lies", "lay",
    "rose", "rise", "rises", "drew", "draw", "draws", "drawn", "chose", "choose", "chosen",
    "spoke", "speak", "speaks", "spoken", "broke", "break", "breaks", "broken", "struck", "strike",
    "strikes", "fought", "fight", "fights", "taught", "teach", "teaches", "caught", "catch", "ate",
    "eat", "eats", "eaten", "flew", "fly", "flies", "flown", "sang", "sing", "sings", "sung",
    "lived", "live", "lives", "died", "die", "dies", "jumped", "seems", "seem", "means", "mean",
    "meant", "uses", "use", "needs", "need", "wants", "want", "helps", "help", "plays", "play",
    "works", "work", "moves", "move", "stays", "stay", "ends", "end", "opened", "open", "opens",
    "closed", "close", "closes", "joined", "join", "joins", "let", "lets", "became",
];

const ADJECTIVES: &[&str] = &[
    "new",
    "old",
    "big",
    "small",
    "large",
    "great",
    "good",
    "bad",
    "best",
    "better",
    "worst",
    "worse",
    "high",
    "low",
    "long",
    "short",
    "early",
    "late",
    "major",
    "minor",
    "main",
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
    "last",
    "next",
    "many",
    "few",
    "several",
    "other",
    "same",
    "own",
    "various",
    "different",
    "important",
    "quick",
    "slow",
    "brown",
    "red",
    "green",
    "blue",
    "black",
    "white",
    "yellow",
    "grey",
    "gray",
    "young",
    "little",
    "much",
    "more",
    "most",
    "less",
    "least",
    "certain",
    "whole",
    "entire",
    "full",
    "free",
    "total",
    "former",
    "latter",
    "recent",
    "modern",
    "ancient",
    "original",
    "final",
    "top",
    "common",
    "public",
    "private",
    "local",
    "royal",
    "human",
    "popular",
    "rich",
    "poor",
    "strong",
    "weak",
    "hot",
    "cold",
    "warm",
    "dark",
    "light",
    "deep",
    "wide",
    "key",
    "single",
    "double",
    "prime",
    "true",
    "false",
    "real",
    "open",
    "close",
    "near",
    "far",
    "northern",
    "southern",
    "eastern",
    "western",
    "north",
    "south",
    "east",
    "west",
    "upper",
    "lower",
    "inner",
    "outer",
    "average",
    "annual",
    "daily",
    "largest",
    "smallest",
    "highest",
    "oldest",
    "biggest",
    "longest",
    "greatest",
    "earliest",
    "latest",
    "only",
];

const NUMBER_WORDS: &[&str] = &[
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
    "twenty",
    "thirty",
    "forty",
    "fifty",
    "sixty",
    "seventy",
    "eighty",
    "ninety",
    "hundred",
    "thousand",
    "million",
    "billion",
    "trillion",
    "dozen",
    "hundreds",
    "thousands",
    "millions",
    "billions",
];

const SUFFIX_EXCEPTIONS: &[&str] = &[
    // -ed
    "hundred",
    "red",
    "bed",
    "speed",
    "seed",
    "shed",
    "breed",
    "creed",
    "greed",
    "steed",
    "sacred",
    "naked",
    "wicked",
    "kindred",
    "need",
    "feed",
    "reed",
    "weed",
    // -ing
    "building",
    "king",
    "thing",
    "things",
    "morning",
    "evening",
    "ceiling",
    "wedding",
    "meeting",
    "painting",
    "spring",
    "string",
    "ring",
    "wing",
    "sing",
    "bring",
    "during",
    "nothing",
    "something",
    "everything",
    "anything",
    "beijing",
    "viking",
    "ding",
    // -ly
    "family",
    "supply",
    "reply",
    "assembly",
    "ally",
    "rally",
    "belly",
    "jelly",
    "bully",
    "lily",
    "italy",
    "july",
    "anomaly",
    "monopoly",
    "butterfly",
    "fly",
    "only",
    "early",
    "daily",
    "holy",
    "ugly",
    "likely",
    "lonely",
    "friendly",
    "elderly",
    "weekly",
    "monthly",
    "yearly",
    // adjective suffixes
    "capital",
    "festival",
    "hospital",
    "animal",
    "signal",
    "official",
    "rival",
    "terminal",
    "arrival",
    "approval",
    "trial",
    "proposal",
    "journal",
    "canal",
    "metal",
    "total",
    "portal",
    "ritual",
    "criminal",
    "general",
    "principal",
    "manual",
    "material",
    "individual",
    "potential",
    "professional",
    "mineral",
    "cathedral",
    "admiral",
    "interval",
    "tribunal",
    "memorial",
    "survival",
    "removal",
    "renewal",
    "denial",
    "music",
    "republic",
    "topic",
    "logic",
    "traffic",
    "clinic",
    "mechanic",
    "critic",
    "magic",
    "panic",
    "fabric",
    "rhetoric",
    "arithmetic",
    "epic",
    "archive",
    "detective",
    "executive",
    "initiative",
    "representative",
    "alternative",
    "motive",
    "olive",
    "drive",
    "hive",
    "five",
    "objective",
    "directive",
    "incentive",
    "perspective",
    "captive",
    "explosive",
    "library",
    "secretary",
    "dictionary",
    "anniversary",
    "salary",
    "boundary",
    "commentary",
    "documentary",
    "summary",
    "diary",
    "glossary",
    "itinerary",
    "sanctuary",
    "vocabulary",
    "missionary",
    "adversary",
    "estuary",
    "emissary",
    "fish",
    "dish",
    "wish",
    "english",
    "cable",
    "table",
    "bible",
    "vegetable",
    "fable",
    "stable",
];

struct Lexicon {
    determiners: HashSet<&'static str>,
    function_words: HashSet<&'static str>,
    verbs: HashSet<&'static str>,
    adjectives: HashSet<&'static str>,
    numbers: HashSet<&'static str>,
    suffix_exceptions: HashSet<&'static str>,
}

fn lexicon() -> &'static Lexicon {
    static LEX: OnceLock<Lexicon> = OnceLock::new();
    LEX.get_or_init(|| Lexicon {
        determiners: DETERMINERS.iter().copied().collect(),
        function_words: FUNCTION_WORDS.iter().copied().collect(),
        verbs: VERBS.iter().copied().collect(),
        adjectives: ADJECTIVES.iter().copied().collect(),
        numbers: NUMBER_WORDS.iter().copied().collect(),
        suffix_exceptions: SUFFIX_EXCEPTIONS.iter().copied().collect(),
    })
}

/// Is the lowercased word a known common word (any lexicon entry)? Used by
/// the entity tagger to discount sentence-initial capitals.
pub fn is_common_word(lower: &str) -> bool {
    let lex = lexicon();
    lex.determiners.contains(lower)
        || lex.function_words.contains(lower)
        || lex.verbs.contains(lower)
        || lex.adjectives.contains(lower)
        || lex.numbers.contains(lower)
}

pub fn is_number_word(lower: &str) -> bool {
    lexicon().numbers.contains(lower)
}

fn lexical_pos(lower: &str) -> Option<CoarsePos> {
    let lex = lexicon();
    if lex.determiners.contains(lower) {
        Some(CoarsePos::Det)
    } else if lex.verbs.contains(lower) {
        Some(CoarsePos::Verb)
    } else if lex.function_words.contains(lower) {
        Some(CoarsePos::Other)
    } else if lex.numbers.contains(lower) {
        Some(CoarsePos::Num)
    } else if lex.adjectives.contains(lower) {
        Some(CoarsePos::Adj)
    } else {
        None
    }
}

fn suffix_pos(lower: &str) -> Option<CoarsePos> {
    if lexicon().suffix_exceptions.contains(lower) {
        return None;
    }
    let n = lower.chars().count();
    if n >= 5 && lower.ends_with("ed") || n >= 6 && lower.ends_with("ing") {
        return Some(CoarsePos::Verb);
    }
    if n >= 4 && lower.ends_with("ly") {
        return Some(CoarsePos::Other);
    }
    const ADJ_SUFFIXES: &[&str] = &[
        "ous", "ful", "ive", "able", "ible", "ical", "less", "ish", "ary", "ial", "ional", "ic",
        "al",
    ];
    if n >= 5 && ADJ_SUFFIXES.iter().any(|s| lower.ends_with(s)) {
        return Some(CoarsePos::Adj);
    }
    None
}

fn starts_sentence(tokens: &[Token], i: usize) -> bool {
    i == 0
        || matches!(
            tokens[i - 1].text.as_str(),
            "." | "!" | "?" | "\"" | "\u{201C}" | ":" | "(" | "\u{2014}"
        )
}

/// Tag every token in place.
pub fn tag_pos(tokens: &mut [Token]) {
    let mut prev: Option<CoarsePos> = None;
    let mut prev_lower = String::new();
    for i in 0..tokens.len() {
        let text = tokens[i].text.as_str();
        let lower = text.to_lowercase();
        let first = text.chars().next().unwrap_or(' ');

        let pos = if tokens[i].is_punct() {
            CoarsePos::Punct
        } else if first.is_ascii_digit() {
            CoarsePos::Num
        } else if first.is_uppercase() {
            // a capital at sentence start only marks a proper noun when the
            // word is not a known common word
            match lexical_pos(&lower) {
                Some(p) if starts_sentence(tokens, i) => p,
                _ if lower == "i" => CoarsePos::Other,
                _ => CoarsePos::Propn,
            }
        } else if let Some(p) = lexical_pos(&lower) {
            p
        } else if !first.is_alphabetic() {
            CoarsePos::Other
        } else {
            let after_det = matches!(prev, Some(CoarsePos::Det) | Some(CoarsePos::Adj));
            match suffix_pos(&lower) {
                Some(CoarsePos::Verb) if after_det => {
                    if lower.ends_with("ed") {
                        CoarsePos::Adj
                    } else {
                        CoarsePos::Noun
                    }
                }
                Some(p) => p,
                None => {
                    let verb_context = matches!(
                        prev_lower.as_str(),
                        "to" | "will"
                            | "would"
                            | "can"
                            | "could"
                            | "may"
                            | "might"
                            | "shall"
                            | "should"
                            | "must"
                            | "did"
                            | "does"
                            | "do"
                            | "he"
                            | "she"
                            | "it"
                            | "they"
                            | "we"
                            | "i"
                            | "you"
                            | "who"
                            | "which"
                    );
                    if verb_context {
                        CoarsePos::Verb
                    } else {
                        CoarsePos::Noun
                    }
                }
            }
        };
        tokens[i].coarse_pos = Some(pos);
        prev = Some(pos);
        prev_lower = lower;
    }
}
