//! Writing synthetic corpora to disk.

use std::io::Write;
use std::path::{Path, PathBuf};

use archlog_core::bot::Subdataset;
use archlog_core::synth::{generate_corpus, Corpus, SynthSpec};
use archlog_core::temporal::TemporalHistogram;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::io::Output;
use crate::patterns::write_json;
use crate::records::JsonLines;

/// Totals a correct pipeline run must reproduce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub seed: u64,
    pub lines: u64,
    pub sessions: u64,
    pub survivors: u64,
    pub noise_lines: u64,
    pub malformed_lines: u64,
    pub human_histogram: TemporalHistogram,
    pub robot_histogram: TemporalHistogram,
}

#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub log: PathBuf,
    pub truth: PathBuf,
    pub expected: PathBuf,
}

pub fn load_spec(path: &Path) -> Result<SynthSpec> {
    let text = std::fs::read_to_string(path).at(path)?;
    let bad = |message: String| Error::BadInput { path: path.into(), message };
    let mut value: toml::Value = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
    dates_to_strings(&mut value);
    let spec = SynthSpec::deserialize(value).map_err(|e| bad(e.to_string()))?;
    spec.validate().map_err(|e| Error::BadInput { path: path.into(), message: e.to_string() })?;
    Ok(spec)
}

// chrono reads dates from strings; bare TOML dates arrive as datetimes
fn dates_to_strings(v: &mut toml::Value) {
    match v {
        toml::Value::Datetime(d) => *v = toml::Value::String(d.to_string()),
        toml::Value::Array(a) => a.iter_mut().for_each(dates_to_strings),
        toml::Value::Table(t) => t.iter_mut().for_each(|(_, v)| dates_to_strings(v)),
        _ => {}
    }
}

/// Generates the corpus and writes `access.log` (or `access.log.gz`),
/// `truth.jsonl` and `expected.json` into `dir`.
pub fn write_corpus(spec: &SynthSpec, dir: &Path, gzip: bool) -> Result<(Corpus, SynthFiles)> {
    let corpus = generate_corpus(spec).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::create_dir_all(dir).at(dir)?;
    let files = SynthFiles {
        log: dir.join(if gzip { "access.log.gz" } else { "access.log" }),
        truth: dir.join("truth.jsonl"),
        expected: dir.join("expected.json"),
    };
    let mut out = Output::create(&files.log).at(&files.log)?;
    for l in &corpus.lines {
        out.write_all(l.as_bytes()).at(&files.log)?;
        out.write_all(b"\n").at(&files.log)?;
    }
    out.finish().at(&files.log)?;

    let mut truth = JsonLines::create(&files.truth)?;
    truth.write_batch(&corpus.truth)?;
    truth.finish()?;

    let expected = Expected {
        seed: spec.seed,
        lines: corpus.lines.len() as u64,
        sessions: corpus.truth.len() as u64,
        survivors: corpus.survivor_count(),
        noise_lines: corpus.noise_lines,
        malformed_lines: corpus.malformed_lines,
        human_histogram: corpus.expected_histogram(Subdataset::Human),
        robot_histogram: corpus.expected_histogram(Subdataset::Robot),
    };
    write_json(&files.expected, &expected)?;
    Ok((corpus, files))
}
