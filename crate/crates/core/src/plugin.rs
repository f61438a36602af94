//! Out-of-process plug-ins speaking line-delimited JSON over stdin/stdout.
//!
//! A plug-in is any executable that reads one JSON request per line and
//! writes exactly one JSON response per line, in request order. Two request
//! kinds exist:
//!
//! * tagging: `{"id", "text"}` -> `{"id", "spans": [{"start", "end", "label"}]}`
//!   with character offsets into `text`;
//! * translation: `{"id", "cloze", "category"}` -> `{"id", "question"}`, with
//!   an optional `"score"` (log-likelihood) in the response. When the request
//!   also carries `"question"`, the plug-in is being asked to score that
//!   question against the cloze.
//!
//! Every read is guarded by a watchdog, `CLOZE_FORGE_PLUGIN_TIMEOUT_MS`
//! milliseconds (default 30000).

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answers::{SpanTagger, TaggedSpan};
use crate::corpus::{char_len, Paragraph};

pub const TIMEOUT_ENV: &str = "CLOZE_FORGE_PLUGIN_TIMEOUT_MS";
const DEFAULT_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Error)]
pub enum PluginError {
    #[error("plug-in {plugin}: failed to start: {source}")]
    Spawn {
        plugin: String,
        #[source]
        source: std::io::Error,
    },
    #[error("plug-in {plugin}: I/O error: {source}")]
    Io {
        plugin: String,
        #[source]
        source: std::io::Error,
    },
    #[error("plug-in {plugin}: no response for line {line} within {timeout_ms} ms")]
    Timeout {
        plugin: String,
        line: usize,
        timeout_ms: u64,
    },
    #[error("plug-in {plugin}: output ended before response line {line} (expected {expected} responses)")]
    Closed {
        plugin: String,
        line: usize,
        expected: usize,
    },
    #[error("plug-in {plugin}: malformed response on line {line}: {message}")]
    Malformed {
        plugin: String,
        line: usize,
        message: String,
    },
    #[error("plug-in {plugin}: response line {line} has id {got:?}, expected {expected:?}")]
    IdMismatch {
        plugin: String,
        line: usize,
        expected: String,
        got: String,
    },
    #[error(
        "plug-in {plugin}: line {line}: span {start}..{end} invalid for text of {len} characters"
    )]
    InvalidSpan {
        plugin: String,
        line: usize,
        start: usize,
        end: usize,
        len: usize,
    },
}

impl PluginError {
    pub fn plugin(&self) -> &str {
        match self {
            Self::Spawn { plugin, .. }
            | Self::Io { plugin, .. }
            | Self::Timeout { plugin, .. }
            | Self::Closed { plugin, .. }
            | Self::Malformed { plugin, .. }
            | Self::IdMismatch { plugin, .. }
            | Self::InvalidSpan { plugin, .. } => plugin,
        }
    }
}

/// A program plus arguments, parsed from a whitespace-separated string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PluginCommand {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl PluginCommand {
    pub fn new(
        program: impl Into<String>,
        args: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Self {
            program: program.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn parse(spec: &str) -> Option<Self> {
        let mut parts = spec.split_whitespace();
        let program = parts.next()?.to_string();
        Some(Self {
            program,
            args: parts.map(str::to_string).collect(),
        })
    }

    pub fn display_name(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn timeout_from_env() -> Duration {
    let ms = std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .unwrap_or(DEFAULT_TIMEOUT_MS);
    Duration::from_millis(ms)
}

/// A running plug-in. Responses are drained by a reader thread so a large
/// batch can be written without deadlocking on full pipes.
pub struct PluginProcess {
    name: String,
    child: Child,
    stdin: Option<ChildStdin>,
    responses: Receiver<std::io::Result<String>>,
    timeout: Duration,
    lines_read: usize,
}

impl PluginProcess {
    pub fn spawn(cmd: &PluginCommand) -> Result<Self, PluginError> {
        Self::spawn_with_timeout(cmd, timeout_from_env())
    }

    pub fn spawn_with_timeout(cmd: &PluginCommand, timeout: Duration) -> Result<Self, PluginError> {
        let name = cmd.display_name();
        let mut child = Command::new(&cmd.program)
            .args(&cmd.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| PluginError::Spawn {
                plugin: name.clone(),
                source,
            })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Self {
            name,
            child,
            stdin,
            responses: rx,
            timeout,
            lines_read: 0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Send a batch of requests and collect exactly one response per request.
    /// Returns each response with its 1-based line number in the plug-in's
    /// output stream.
    pub fn exchange<Req, Resp>(
        &mut self,
        requests: &[Req],
    ) -> Result<Vec<(usize, Resp)>, PluginError>
    where
        Req: Serialize,
        Resp: DeserializeOwned,
    {
        if requests.is_empty() {
            return Ok(Vec::new());
        }
        let io_err = |source| PluginError::Io {
            plugin: self.name.clone(),
            source,
        };
        {
            let stdin = self
                .stdin
                .as_mut()
                .ok_or_else(|| io_err(std::io::Error::from(std::io::ErrorKind::BrokenPipe)))?;
            let mut buf = Vec::new();
            for req in requests {
                serde_json::to_writer(&mut buf, req).expect("requests serialize");
                buf.push(b'\n');
            }
            // a dead child shows up as a broken pipe here or as EOF below
            if let Err(e) = stdin.write_all(&buf).and_then(|_| stdin.flush()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(io_err(e));
                }
            }
        }

        let mut out = Vec::with_capacity(requests.len());
        for _ in 0..requests.len() {
            let line_no = self.lines_read + 1;
            let line = match self.responses.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(io_err(e)),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(PluginError::Timeout {
                        plugin: self.name.clone(),
                        line: line_no,
                        timeout_ms: self.timeout.as_millis() as u64,
                    })
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(PluginError::Closed {
                        plugin: self.name.clone(),
                        line: line_no,
                        expected: requests.len(),
                    })
                }
            };
            self.lines_read += 1;
            let resp = serde_json::from_str(&line).map_err(|e| PluginError::Malformed {
                plugin: self.name.clone(),
                line: line_no,
                message: e.to_string(),
            })?;
            out.push((line_no, resp));
        }
        Ok(out)
    }
}

impl Drop for PluginProcess {
    fn drop(&mut self) {
        // closing stdin lets well-behaved plug-ins exit on their own
        self.stdin.take();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagRequest {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireSpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagResponse {
    pub id: String,
    pub spans: Vec<WireSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateRequest {
    pub id: String,
    pub cloze: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateResponse {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

fn paragraph_request_id(p: &Paragraph) -> String {
    format!("{}#{}", p.doc_id, p.para_index)
}

/// Tagger backed by a tagging plug-in.
pub struct PluginTagger {
    process: PluginProcess,
}

impl PluginTagger {
    pub fn spawn(cmd: &PluginCommand) -> Result<Self, PluginError> {
        Ok(Self {
            process: PluginProcess::spawn(cmd)?,
        })
    }

    pub fn from_process(process: PluginProcess) -> Self {
        Self { process }
    }

    /// Tag a batch of paragraphs in one round trip.
    pub fn tag_batch(
        &mut self,
        paragraphs: &[&Paragraph],
    ) -> Result<Vec<Vec<TaggedSpan>>, PluginError> {
        let requests: Vec<TagRequest> = paragraphs
            .iter()
            .map(|p| TagRequest {
                id: paragraph_request_id(p),
                text: p.text.clone(),
            })
            .collect();
        let responses: Vec<(usize, TagResponse)> = self.process.exchange(&requests)?;
        let mut out = Vec::with_capacity(responses.len());
        for ((line, resp), (req, para)) in
            responses.into_iter().zip(requests.iter().zip(paragraphs))
        {
            if resp.id != req.id {
                return Err(PluginError::IdMismatch {
                    plugin: self.process.name().to_string(),
                    line,
                    expected: req.id.clone(),
                    got: resp.id,
                });
            }
            let len = char_len(&para.text);
            let mut spans = Vec::with_capacity(resp.spans.len());
            for s in resp.spans {
                if s.start >= s.end || s.end > len {
                    return Err(PluginError::InvalidSpan {
                        plugin: self.process.name().to_string(),
                        line,
                        start: s.start,
                        end: s.end,
                        len,
                    });
                }
                spans.push(TaggedSpan {
                    char_start: s.start,
                    char_end: s.end,
                    label: s.label,
                });
            }
            out.push(spans);
        }
        Ok(out)
    }
}

impl SpanTagger for PluginTagger {
    fn name(&self) -> &str {
        self.process.name()
    }

    fn tag(&mut self, paragraph: &Paragraph) -> Result<Vec<TaggedSpan>, PluginError> {
        Ok(self.tag_batch(&[paragraph])?.pop().unwrap_or_default())
    }
}

/// Cloze-to-question translator backed by a translation plug-in.
pub struct PluginTranslator {
    process: PluginProcess,
}

impl PluginTranslator {
    pub fn spawn(cmd: &PluginCommand) -> Result<Self, PluginError> {
        Ok(Self {
            process: PluginProcess::spawn(cmd)?,
        })
    }

    pub fn from_process(process: PluginProcess) -> Self {
        Self { process }
    }

    pub fn name(&self) -> &str {
        self.process.name()
    }

    /// Send requests and return responses in order, checking ids.
    pub fn request(
        &mut self,
        requests: &[TranslateRequest],
    ) -> Result<Vec<TranslateResponse>, PluginError> {
        let responses: Vec<(usize, TranslateResponse)> = self.process.exchange(requests)?;
        responses
            .into_iter()
            .zip(requests)
            .map(|((line, resp), req)| {
                if resp.id == req.id {
                    Ok(resp)
                } else {
                    Err(PluginError::IdMismatch {
                        plugin: self.process.name().to_string(),
                        line,
                        expected: req.id.clone(),
                        got: resp.id,
                    })
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str) -> PluginCommand {
        PluginCommand::new("/bin/sh", ["-c", script])
    }

    #[test]
    fn parse_command() {
        let cmd = PluginCommand::parse("python3  tagger.py --fast").unwrap();
        assert_eq!(cmd.program, "python3");
        assert_eq!(cmd.args, ["tagger.py", "--fast"]);
        assert!(PluginCommand::parse("   ").is_none());
    }

    #[test]
    fn spawn_failure_names_plugin() {
        let err = PluginProcess::spawn(&PluginCommand::new(
            "/nonexistent/plugin",
            Vec::<String>::new(),
        ))
        .err()
        .unwrap();
        assert!(matches!(err, PluginError::Spawn { .. }));
        assert_eq!(err.plugin(), "/nonexistent/plugin");
    }

    #[test]
    fn empty_batch_is_free() {
        let mut p = PluginProcess::spawn(&sh("cat")).unwrap();
        let out: Vec<(usize, TagResponse)> = p.exchange::<TagRequest, _>(&[]).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn tagger_protocol_round_trip() {
        // replies with one fixed span per request, echoing the id
        let script = r#"while IFS= read -r line; do
            id=$(printf '%s' "$line" | sed 's/.*"id":"\([^"]*\)".*/\1/')
            printf '{"id":"%s","spans":[{"start":0,"end":2,"label":"GPE"}]}\n' "$id"
        done"#;
        let mut tagger = PluginTagger::spawn(&sh(script)).unwrap();
        let a = Paragraph::new("d", 0, "Oz is far");
        let b = Paragraph::new("d", 1, "Oz again");
        let spans = tagger.tag_batch(&[&a, &b]).unwrap();
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[1][0].label, "GPE");
        assert_eq!((spans[1][0].char_start, spans[1][0].char_end), (0, 2));
    }

    #[test]
    fn malformed_response_reports_line() {
        // cat echoes the request, which has no "spans" field
        let mut tagger = PluginTagger::spawn(&sh("cat")).unwrap();
        let err = tagger.tag(&Paragraph::new("d", 0, "text")).unwrap_err();
        assert!(
            matches!(err, PluginError::Malformed { line: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn short_output_is_protocol_error() {
        let mut p =
            PluginProcess::spawn(&sh("read -r a; echo '{\"id\":\"0\",\"question\":\"x ?\"}'"))
                .unwrap();
        let reqs: Vec<TranslateRequest> = (0..3)
            .map(|i| TranslateRequest {
                id: i.to_string(),
                cloze: "c".into(),
                category: "PLACE".into(),
                question: None,
            })
            .collect();
        let err = p.exchange::<_, TranslateResponse>(&reqs).unwrap_err();
        assert!(
            matches!(
                err,
                PluginError::Closed {
                    line: 2,
                    expected: 3,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn watchdog_times_out() {
        let mut p =
            PluginProcess::spawn_with_timeout(&sh("sleep 5"), Duration::from_millis(100)).unwrap();
        let err = p
            .exchange::<_, TagResponse>(&[TagRequest {
                id: "x".into(),
                text: "y".into(),
            }])
            .unwrap_err();
        assert!(matches!(err, PluginError::Timeout { line: 1, .. }), "{err}");
    }

    #[test]
    fn invalid_span_rejected() {
        let script = r#"while IFS= read -r line; do echo '{"id":"d#0","spans":[{"start":3,"end":99,"label":"ORG"}]}'; done"#;
        let mut tagger = PluginTagger::spawn(&sh(script)).unwrap();
        let err = tagger.tag(&Paragraph::new("d", 0, "short")).unwrap_err();
        assert!(
            matches!(
                err,
                PluginError::InvalidSpan {
                    end: 99,
                    len: 5,
                    ..
                }
            ),
            "{err}"
        );
    }
}
