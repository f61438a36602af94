//! Question corpus mining: filter raw text lines down to short wh-questions,
//! deduplicate them, and draw a wh-balanced sample.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::tokenize;
use crate::seed;
use crate::translate::WhWord;

pub const MAX_QUESTION_TOKENS: usize = 20;

#[derive(Debug, Error)]
pub enum MineError {
    #[error("{source_name}:{line}: {source}")]
    Io {
        source_name: String,
        line: usize,
        #[source]
        source: io::Error,
    },
    #[error("dedup store: {0}")]
    Dedup(#[source] io::Error),
}

/// Selection rule for mined questions: starts with one of the six wh-words,
/// ends in "?", contains neither "??" nor "?!", and has at most 20 tokens.
pub fn is_candidate_question(line: &str) -> bool {
    let line = line.trim();
    WhWord::from_prefix(line).is_some()
        && line.ends_with('?')
        && !line.contains("??")
        && !line.contains("?!")
        && tokenize(line).len() <= MAX_QUESTION_TOKENS
}

pub fn normalize_whitespace(line: &str) -> String {
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinedQuestion {
    pub text: String,
    pub wh_word: WhWord,
    pub source_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineReport {
    pub lines_read: usize,
    pub rejected: usize,
    pub dedup_hits: usize,
    pub accepted: BTreeMap<WhWord, usize>,
}

impl MineReport {
    pub fn total_accepted(&self) -> usize {
        self.accepted.values().sum()
    }

    pub fn merge(&mut self, other: &MineReport) {
        self.lines_read += other.lines_read;
        self.rejected += other.rejected;
        self.dedup_hits += other.dedup_hits;
        for (wh, n) in &other.accepted {
            *self.accepted.entry(*wh).or_default() += n;
        }
    }
}

type Key = [u8; 16];

fn content_key(text: &str) -> Key {
    let digest = Sha256::digest(text.as_bytes());
    let mut key = [0u8; 16];
    key.copy_from_slice(&digest[..16]);
    key
}

struct SpillRun {
    file: File,
    len: u64,
}

impl SpillRun {
    fn contains(&mut self, key: &Key) -> io::Result<bool> {
        let (mut lo, mut hi) = (0u64, self.len);
        let mut buf = [0u8; 16];
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            self.file.seek(SeekFrom::Start(mid * 16))?;
            self.file.read_exact(&mut buf)?;
            match buf.cmp(key) {
                std::cmp::Ordering::Equal => return Ok(true),
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
            }
        }
        Ok(false)
    }

    fn read_all(&mut self) -> io::Result<Vec<Key>> {
        self.file.seek(SeekFrom::Start(0))?;
        let mut out = Vec::with_capacity(self.len as usize);
        let mut reader = BufReader::new(&mut self.file);
        let mut buf = [0u8; 16];
        for _ in 0..self.len {
            reader.read_exact(&mut buf)?;
            out.push(buf);
        }
        Ok(out)
    }
}

const MAX_RUNS: usize = 16;

/// Exact-duplicate filter over 128-bit content hashes. Keeps at most
/// `memory_limit` keys in memory; beyond that, sorted runs are spilled to
/// temporary files and probed by binary search.
pub struct DedupStore {
    memory: HashSet<Key>,
    memory_limit: usize,
    runs: Vec<SpillRun>,
}

impl Default for DedupStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl DedupStore {
    pub fn in_memory() -> Self {
        Self::with_memory_limit(usize::MAX)
    }

    pub fn with_memory_limit(memory_limit: usize) -> Self {
        Self {
            memory: HashSet::new(),
            memory_limit: memory_limit.max(1),
            runs: Vec::new(),
        }
    }

    pub fn spilled_runs(&self) -> usize {
        self.runs.len()
    }

    /// Record `text`; true if it had not been seen before.
    pub fn insert(&mut self, text: &str) -> io::Result<bool> {
        let key = content_key(text);
        if self.memory.contains(&key) {
            return Ok(false);
        }
        for run in &mut self.runs {
            if run.contains(&key)? {
                return Ok(false);
            }
        }
        self.memory.insert(key);
        if self.memory.len() >= self.memory_limit {
            self.spill()?;
        }
        Ok(true)
    }

    fn spill(&mut self) -> io::Result<()> {
        let mut keys: Vec<Key> = self.memory.drain().collect();
        if self.runs.len() + 1 > MAX_RUNS {
            for mut run in self.runs.drain(..) {
                keys.extend(run.read_all()?);
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let mut file = tempfile::tempfile()?;
        {
            let mut w = BufWriter::new(&mut file);
            for k in &keys {
                w.write_all(k)?;
            }
            w.flush()?;
        }
        self.runs.push(SpillRun {
            file,
            len: keys.len() as u64,
        });
        Ok(())
    }
}

/// Filter and deduplicate one line stream, passing accepted questions to
/// `sink` in input order. Accepted text is whitespace-normalized.
pub fn mine_questions<R, F>(
    source_name: &str,
    reader: R,
    dedup: &mut DedupStore,
    mut sink: F,
) -> Result<MineReport, MineError>
where
    R: BufRead,
    F: FnMut(MinedQuestion) -> io::Result<()>,
{
    let mut report = MineReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let io_err = |source| MineError::Io {
            source_name: source_name.to_string(),
            line: line_no,
            source,
        };
        let line = line.map_err(io_err)?;
        report.lines_read += 1;
        if !is_candidate_question(&line) {
            report.rejected += 1;
            continue;
        }
        let text = normalize_whitespace(&line);
        if !dedup.insert(&text).map_err(MineError::Dedup)? {
            report.dedup_hits += 1;
            continue;
        }
        let wh_word = WhWord::from_prefix(&text).expect("candidate has a wh prefix");
        *report.accepted.entry(wh_word).or_default() += 1;
        sink(MinedQuestion {
            text,
            wh_word,
            source_id: format!("{source_name}:{line_no}"),
        })
        .map_err(io_err)?;
    }
    Ok(report)
}

/// Mine several files. Filtering runs in parallel per file; the dedup merge
/// is sequential in the order given, so output does not depend on how many
/// workers ran.
pub fn mine_files<F>(
    paths: &[PathBuf],
    dedup: &mut DedupStore,
    mut sink: F,
) -> Result<MineReport, MineError>
where
    F: FnMut(MinedQuestion) -> io::Result<()>,
{
    // phase 1: per-file filtering into a temp shard of "line_no\ttext" records
    let shards: Vec<Result<(File, MineReport), MineError>> =
        paths.par_iter().map(|path| filter_shard(path)).collect();

    // phase 2: ordered merge through the dedup store
    let mut report = MineReport::default();
    for (path, shard) in paths.iter().zip(shards) {
        let (mut file, shard_report) = shard?;
        report.lines_read += shard_report.lines_read;
        report.rejected += shard_report.rejected;
        let name = path.display().to_string();
        let shard_err = |source| MineError::Io {
            source_name: name.clone(),
            line: 0,
            source,
        };
        file.seek(SeekFrom::Start(0)).map_err(shard_err)?;
        for record in BufReader::new(file).lines() {
            let record = record.map_err(shard_err)?;
            let (line_no, text) = record.split_once('\t').expect("shard record");
            if !dedup.insert(text).map_err(MineError::Dedup)? {
                report.dedup_hits += 1;
                continue;
            }
            let wh_word = WhWord::from_prefix(text).expect("candidate has a wh prefix");
            *report.accepted.entry(wh_word).or_default() += 1;
            sink(MinedQuestion {
                text: text.to_string(),
                wh_word,
                source_id: format!("{name}:{line_no}"),
            })
            .map_err(shard_err)?;
        }
    }
    Ok(report)
}

fn filter_shard(path: &Path) -> Result<(File, MineReport), MineError> {
    let name = path.display().to_string();
    let err = |line, source| MineError::Io {
        source_name: name.clone(),
        line,
        source,
    };
    let input = File::open(path).map_err(|e| err(0, e))?;
    let mut shard = tempfile::tempfile().map_err(|e| err(0, e))?;
    let mut report = MineReport::default();
    {
        let mut w = BufWriter::new(&mut shard);
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line.map_err(|e| err(i + 1, e))?;
            report.lines_read += 1;
            if !is_candidate_question(&line) {
                report.rejected += 1;
                continue;
            }
            // tabs cannot survive whitespace normalization, so they delimit safely
            writeln!(w, "{}\t{}", i + 1, normalize_whitespace(&line)).map_err(|e| err(i + 1, e))?;
        }
        w.flush().map_err(|e| err(0, e))?;
    }
    Ok((shard, report))
}

/// Mine in-memory lines; a convenience over [`mine_questions`].
pub fn mine_lines<'a>(
    lines: impl IntoIterator<Item = &'a str>,
) -> (Vec<MinedQuestion>, MineReport) {
    let text: String = lines.into_iter().flat_map(|l| [l, "\n"]).collect();
    let mut out = Vec::new();
    let report = mine_questions(
        "<memory>",
        text.as_bytes(),
        &mut DedupStore::in_memory(),
        |q| {
            out.push(q);
            Ok(())
        },
    )
    .expect("in-memory mining cannot fail");
    (out, report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedSample {
    pub questions: Vec<MinedQuestion>,
    pub per_class_target: usize,
    pub supply: BTreeMap<WhWord, usize>,
    /// Classes that could not reach the target, with how many were missing.
    pub shortfall: BTreeMap<WhWord, usize>,
}

impl BalancedSample {
    pub fn class_counts(&self) -> BTreeMap<WhWord, usize> {
        let mut out = BTreeMap::new();
        for q in &self.questions {
            *out.entry(q.wh_word).or_default() += 1;
        }
        out
    }
}

/// Streaming per-class reservoirs holding `n_total / 6` questions for each
/// wh-word class.
pub struct BalancedReservoir {
    target: usize,
    arrivals: usize,
    reservoirs: BTreeMap<WhWord, Vec<(usize, MinedQuestion)>>,
    rngs: BTreeMap<WhWord, seed::Rng>,
    supply: BTreeMap<WhWord, usize>,
}

impl BalancedReservoir {
    pub fn new(n_total: usize, seed: u64) -> Self {
        let rngs = WhWord::ALL
            .iter()
            .map(|wh| {
                let s = seed::derive_seed(seed, &[b"balance", wh.as_str().as_bytes()]);
                (*wh, seed::rng_from_seed(s))
            })
            .collect();
        Self {
            target: n_total / WhWord::ALL.len(),
            arrivals: 0,
            reservoirs: BTreeMap::new(),
            rngs,
            supply: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, q: MinedQuestion) {
        let arrival = self.arrivals;
        self.arrivals += 1;
        let seen = self.supply.entry(q.wh_word).or_default();
        let t = *seen;
        *seen += 1;
        if self.target == 0 {
            return;
        }
        let res = self.reservoirs.entry(q.wh_word).or_default();
        if res.len() < self.target {
            res.push((arrival, q));
        } else {
            let j = self
                .rngs
                .get_mut(&q.wh_word)
                .expect("rng per class")
                .gen_range(0..=t);
            if j < self.target {
                res[j] = (arrival, q);
            }
        }
    }

    /// Classes in wh-word order, each in arrival order.
    pub fn finish(mut self) -> BalancedSample {
        let target = self.target;
        let mut shortfall = BTreeMap::new();
        let mut questions = Vec::new();
        for wh in WhWord::ALL {
            let mut res = self.reservoirs.remove(&wh).unwrap_or_default();
            if res.len() < target {
                shortfall.insert(wh, target - res.len());
                log::warn!(
                    "wh class {wh}: only {} of {target} questions available",
                    res.len()
                );
            }
            res.sort_by_key(|(arrival, _)| *arrival);
            questions.extend(res.into_iter().map(|(_, q)| q));
        }
        BalancedSample {
            questions,
            per_class_target: target,
            supply: self.supply,
            shortfall,
        }
    }
}

/// Reservoir-sample `n_total / 6` questions per wh-word class.
pub fn balance_sample<I>(questions: I, n_total: usize, seed: u64) -> BalancedSample
where
    I: IntoIterator<Item = MinedQuestion>,
{
    let mut r = BalancedReservoir::new(n_total, seed);
    for q in questions {
        r.push(q);
    }
    r.finish()
}
