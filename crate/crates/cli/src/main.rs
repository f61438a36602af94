mod config;
mod reference;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use cloze_forge::corpus::DocumentReader;
use cloze_forge::dataset::{self, GenerateError, Plugins, SquadError};
use cloze_forge::eval::{self, AnswerMethod, PluginScorer};
use cloze_forge::mine::{self, BalancedReservoir, DedupStore};
use cloze_forge::plugin::{PluginCommand, PluginError, PluginTagger, PluginTranslator};
use cloze_forge::translate::prepend_category_token;
use cloze_forge::Dataset;
use serde::Serialize;

use config::{FileConfig, GenerateOpts};

#[derive(Parser, Debug)]
#[command(
    name = "cloze-forge",
    version,
    about = "Synthesize and evaluate extractive QA data from raw text"
)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// TOML config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Filter text files down to a deduplicated, wh-balanced question corpus.
    Mine {
        /// Input text files, one candidate question per line.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Total questions to keep, split evenly over the six wh-words.
        #[arg(long)]
        n_total: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Prefix each question with its answer category token.
        #[arg(long)]
        category_tokens: bool,
        /// Dedup hashes kept in memory before spilling to disk.
        #[arg(long, default_value_t = 1 << 22)]
        memory_limit: usize,
    },
    /// Generate a SQuAD v1.1 dataset from a JSONL document corpus.
    Generate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the accepted clozes as JSONL.
        #[arg(long)]
        cloze_out: Option<PathBuf>,
        #[command(flatten)]
        opts: GenerateOpts,
    },
    /// Predict an answer for every question in a dataset.
    Answer {
        #[arg(long)]
        dataset: PathBuf,
        /// sliding or posterior.
        #[arg(long)]
        method: AnswerMethod,
        #[arg(short, long)]
        output: PathBuf,
        /// Window size for the sliding-window answerer.
        #[arg(long, default_value_t = eval::DEFAULT_WINDOW)]
        window: usize,
        /// Translator plug-in supplying scores for the posterior answerer.
        #[arg(long)]
        scorer: Option<String>,
    },
    /// Score predictions against a dataset; prints the report as JSON.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Question length and question/context overlap statistics.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print rendered histograms to stderr.
        #[arg(long)]
        text: bool,
        /// Include one entry per question in the JSON report.
        #[arg(long)]
        per_question: bool,
    },
    /// Built-in reference plug-ins.
    #[command(hide = true)]
    Plugin {
        #[arg(value_parser = ["builtin-tagger", "echo-translator"])]
        name: String,
    },
}

/// Error carrying its process exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

const USAGE: u8 = 1;
const DATA: u8 = 2;
const PLUGIN: u8 = 3;

fn fail(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |err| Failure { code, err }
}

trait Code<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Code<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            err: e.into(),
        })
    }
}

impl From<PluginError> for Failure {
    fn from(e: PluginError) -> Self {
        Failure {
            code: PLUGIN,
            err: e.into(),
        }
    }
}

impl From<SquadError> for Failure {
    fn from(e: SquadError) -> Self {
        Failure {
            code: DATA,
            err: e.into(),
        }
    }
}

#[derive(Serialize)]
struct RunManifest<'a, C: Serialize, K: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    config: C,
    inputs: Vec<String>,
    outputs: Vec<String>,
    counters: K,
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn write_json<T: Serialize>(path: &Path, value: &T, pretty: bool) -> Result<(), Failure> {
    let file = File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .code(DATA)?;
    let mut w = BufWriter::new(file);
    if pretty {
        serde_json::to_writer_pretty(&mut w, value).code(DATA)?;
    } else {
        serde_json::to_writer(&mut w, value).code(DATA)?;
    }
    w.write_all(b"\n").and_then(|_| w.flush()).code(DATA)
}

fn write_manifest<C: Serialize, K: Serialize>(
    output: &Path,
    manifest: RunManifest<'_, C, K>,
) -> Result<(), Failure> {
    write_json(&manifest_path(output), &manifest, true)
}

fn display(paths: &[&Path]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

fn plugin_command(spec: &str, what: &str) -> Result<PluginCommand, Failure> {
    PluginCommand::parse(spec).ok_or_else(|| fail(USAGE)(anyhow!("empty {what} command")))
}

fn cmd_mine(
    inputs: &[PathBuf],
    output: &Path,
    n_total: usize,
    seed: u64,
    category_tokens: bool,
    memory_limit: usize,
) -> Result<(), Failure> {
    let mut dedup = DedupStore::with_memory_limit(memory_limit);
    let mut reservoir = BalancedReservoir::new(n_total, seed);
    let report = mine::mine_files(inputs, &mut dedup, |q| {
        reservoir.push(q);
        Ok(())
    })
    .code(DATA)?;
    if report.total_accepted() == 0 {
        return Err(fail(DATA)(anyhow!(
            "no questions accepted from {} lines ({} rejected, {} duplicates)",
            report.lines_read,
            report.rejected,
            report.dedup_hits
        )));
    }
    let sample = reservoir.finish();
    let file = File::create(output)
        .with_context(|| format!("creating {}", output.display()))
        .code(DATA)?;
    let mut w = BufWriter::new(file);
    for q in &sample.questions {
        let line = if category_tokens {
            prepend_category_token(&q.text, q.wh_word.category()).code(DATA)?
        } else {
            q.text.clone()
        };
        writeln!(w, "{line}").code(DATA)?;
    }
    w.flush().code(DATA)?;

    #[derive(Serialize)]
    struct MineConfig {
        n_total: usize,
        category_tokens: bool,
    }
    #[derive(Serialize)]
    struct MineCounters<'a> {
        mined: &'a mine::MineReport,
        per_class_target: usize,
        supply: &'a std::collections::BTreeMap<cloze_forge::WhWord, usize>,
        shortfall: &'a std::collections::BTreeMap<cloze_forge::WhWord, usize>,
        questions_emitted: usize,
    }
    log::info!(
        "mined {} questions from {} lines, kept {}",
        report.total_accepted(),
        report.lines_read,
        sample.questions.len()
    );
    let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    write_manifest(
        output,
        RunManifest {
            tool: "cloze-forge",
            version: env!("CARGO_PKG_VERSION"),
            command: "mine",
            seed: Some(seed),
            config: MineConfig {
                n_total,
                category_tokens,
            },
            inputs: display(&input_refs),
            outputs: display(&[output]),
            counters: MineCounters {
                mined: &report,
                per_class_target: sample.per_class_target,
                supply: &sample.supply,
                shortfall: &sample.shortfall,
                questions_emitted: sample.questions.len(),
            },
        },
    )
}

fn cmd_generate(
    corpus: &Path,
    output: &Path,
    cloze_out: Option<&Path>,
    opts: &GenerateOpts,
) -> Result<(), Failure> {
    let cfg = opts.to_config();
    cfg.validate().map_err(|e| fail(USAGE)(anyhow!(e)))?;
    let mut plugins = Plugins::default();
    if let Some(spec) = &opts.tagger {
        plugins.tagger = Some(PluginTagger::spawn(&plugin_command(spec, "tagger")?)?);
    }
    if let Some(spec) = &opts.translator {
        plugins.translator = Some(PluginTranslator::spawn(&plugin_command(
            spec,
            "translator",
        )?)?);
    }
    let docs = DocumentReader::open(corpus).code(DATA)?;
    let generated = match dataset::generate(docs, &cfg, &mut plugins) {
        Ok(g) => g,
        Err(e) => {
            let code = match &e {
                GenerateError::Config(_) | GenerateError::MissingPlugin(_) => USAGE,
                GenerateError::Plugin(_) => PLUGIN,
                GenerateError::Corpus(_) | GenerateError::NoExamples(_) => DATA,
            };
            return Err(fail(code)(e.into()));
        }
    };
    let ds = Dataset::from_examples(&generated.examples);
    dataset::write_squad(&ds, output)?;
    let mut outputs = vec![output];
    if let Some(path) = cloze_out {
        let file = File::create(path)
            .with_context(|| format!("creating {}", path.display()))
            .code(DATA)?;
        let mut w = BufWriter::new(file);
        for c in &generated.clozes {
            serde_json::to_writer(&mut w, &c.to_record()).code(DATA)?;
            w.write_all(b"\n").code(DATA)?;
        }
        w.flush().code(DATA)?;
        outputs.push(path);
    }
    let r = &generated.report;
    log::info!(
        "{} examples from {} paragraphs ({} clozes too long)",
        r.examples,
        r.paragraphs_sampled,
        r.rejected_too_long
    );
    #[derive(Serialize)]
    struct GenerateManifestConfig<'a> {
        #[serde(flatten)]
        config: &'a cloze_forge::GenConfig,
        tagger: Option<&'a str>,
        translator: Option<&'a str>,
    }
    write_manifest(
        output,
        RunManifest {
            tool: "cloze-forge",
            version: env!("CARGO_PKG_VERSION"),
            command: "generate",
            seed: Some(cfg.seed),
            config: GenerateManifestConfig {
                config: &cfg,
                tagger: opts.tagger.as_deref(),
                translator: opts.translator.as_deref(),
            },
            inputs: display(&[corpus]),
            outputs: display(&outputs),
            counters: r,
        },
    )
}

fn cmd_answer(
    dataset_path: &Path,
    method: AnswerMethod,
    output: &Path,
    window: usize,
    scorer: Option<&str>,
) -> Result<(), Failure> {
    if scorer.is_some() && method != AnswerMethod::Posterior {
        return Err(fail(USAGE)(anyhow!(
            "--scorer only applies to the posterior method"
        )));
    }
    let ds = dataset::read_squad(dataset_path)?;
    let predictions = match scorer {
        None => eval::answer_dataset(&ds, method, window),
        Some(spec) => {
            let translator = PluginTranslator::spawn(&plugin_command(spec, "scorer")?)?;
            eval::answer_dataset_with(&ds, &mut PluginScorer::new(translator)).code(PLUGIN)?
        }
    };
    write_json(output, &predictions, false)?;
    #[derive(Serialize)]
    struct AnswerConfig<'a> {
        method: AnswerMethod,
        window: usize,
        scorer: Option<&'a str>,
    }
    #[derive(Serialize)]
    struct AnswerCounters {
        questions: usize,
        empty_predictions: usize,
    }
    write_manifest(
        output,
        RunManifest {
            tool: "cloze-forge",
            version: env!("CARGO_PKG_VERSION"),
            command: "answer",
            seed: None,
            config: AnswerConfig {
                method,
                window,
                scorer,
            },
            inputs: display(&[dataset_path]),
            outputs: display(&[output]),
            counters: AnswerCounters {
                questions: predictions.len(),
                empty_predictions: predictions.values().filter(|v| v.is_empty()).count(),
            },
        },
    )
}

fn cmd_eval(dataset_path: &Path, predictions_path: &Path) -> Result<(), Failure> {
    let ds = dataset::read_squad(dataset_path)?;
    let text = std::fs::read_to_string(predictions_path)
        .with_context(|| format!("reading {}", predictions_path.display()))
        .code(DATA)?;
    let predictions: HashMap<String, String> = serde_json::from_str(&text)
        .with_context(|| format!("parsing predictions {}", predictions_path.display()))
        .code(DATA)?;
    let unknown = eval::unknown_prediction_ids(&ds, &predictions);
    if !unknown.is_empty() {
        log::warn!(
            "{} predictions match no question (first: {})",
            unknown.len(),
            unknown[0]
        );
    }
    let report = eval::evaluate(&ds, &predictions);
    if report.missing > 0 {
        log::warn!(
            "{} of {} questions have no prediction and score zero",
            report.missing,
            report.n
        );
    }
    println!("{}", serde_json::to_string(&report).code(DATA)?);
    Ok(())
}

fn cmd_stats(
    dataset_path: &Path,
    output: Option<&Path>,
    text: bool,
    per_question: bool,
) -> Result<(), Failure> {
    let ds = dataset::read_squad(dataset_path)?;
    let mut report = dataset::stats(&ds);
    if text {
        eprint!("{}", report.render_text());
    }
    if !per_question {
        report.per_question.clear();
    }
    match output {
        Some(path) => write_json(path, &report, true),
        None => {
            println!("{}", serde_json::to_string_pretty(&report).code(DATA)?);
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).code(USAGE)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.workers.or(file.workers) {
        if n == 0 {
            return Err(fail(USAGE)(anyhow!("--workers must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .code(USAGE)?;
    }
    match cli.command {
        Command::Mine {
            inputs,
            output,
            n_total,
            seed,
            category_tokens,
            memory_limit,
        } => cmd_mine(
            &inputs,
            &output,
            n_total,
            seed.or(file.seed).unwrap_or(0),
            category_tokens,
            memory_limit,
        ),
        Command::Generate {
            corpus,
            output,
            cloze_out,
            opts,
        } => {
            let mut merged = opts.or(file.generate);
            merged.seed = merged.seed.or(file.seed);
            cmd_generate(&corpus, &output, cloze_out.as_deref(), &merged)
        }
        Command::Answer {
            dataset,
            method,
            output,
            window,
            scorer,
        } => cmd_answer(&dataset, method, &output, window, scorer.as_deref()),
        Command::Eval {
            dataset,
            predictions,
        } => cmd_eval(&dataset, &predictions),
        Command::Stats {
            dataset,
            output,
            text,
            per_question,
        } => cmd_stats(&dataset, output.as_deref(), text, per_question),
        Command::Plugin { name } => match name.as_str() {
            "builtin-tagger" => reference::builtin_tagger().code(PLUGIN),
            _ => reference::echo_translator().code(PLUGIN),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, err }) => {
            // library errors already embed their cause in the message
            let mut msg = String::new();
            for cause in err.chain().map(|c| c.to_string()) {
                if !msg.contains(&cause) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
