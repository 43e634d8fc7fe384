//! The parse stage: raw log files in, classified records out.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use archlog_core::bot::KnownBotList;
use archlog_core::features::FeatureStats;
use archlog_core::record::Record;
use archlog_core::report::{InputDigest, ParseCounts};
use archlog_core::text::decode_lossless;
use archlog_core::{classify_path, parse_line, ArchiveProfile, ArchiveRequest, FormatHint, ParseError};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{IoContext, Progress, Result};
use crate::io::{open_hashed, sha256_file};
use crate::manifest::{fingerprint, Manifest, ParseSection, TOOL_VERSION};
use crate::records::{JsonLines, BATCH};

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub format: FormatHint,
    pub profile: ArchiveProfile,
    /// Where to list the lines that failed to parse, as JSON lines.
    pub errors_out: Option<PathBuf>,
}

/// What the parse fingerprint covers.
#[derive(Serialize)]
pub struct ParseSettings<'a> {
    pub inputs: &'a [InputDigest],
    pub format: FormatHint,
    pub profile: ArchiveProfile,
}

pub fn parse_fingerprint(inputs: &[InputDigest], format: FormatHint, profile: ArchiveProfile) -> String {
    fingerprint("", "parse", &ParseSettings { inputs, format, profile })
}

/// Hashes the inputs without parsing them.
pub fn digest_inputs(inputs: &[PathBuf]) -> Result<Vec<InputDigest>> {
    inputs
        .iter()
        .map(|p| Ok(InputDigest { path: p.display().to_string(), sha256: sha256_file(p).at(p)? }))
        .collect()
}

#[derive(Serialize)]
struct BadLine<'a> {
    input: &'a str,
    line: u64,
    offset: usize,
    reason: &'static str,
    text: &'a str,
}

/// Parses `inputs` in order into the record stream `out`. Sequence numbers
/// count lines across all inputs, starting at zero.
pub fn parse_stage(inputs: &[PathBuf], opts: &ParseOptions, out: &Path) -> Result<Manifest> {
    let mut progress = Progress::default();
    run(inputs, opts, out, &mut progress).map_err(|e| e.in_stage("parse", progress))
}

fn run(inputs: &[PathBuf], opts: &ParseOptions, out: &Path, progress: &mut Progress) -> Result<Manifest> {
    let si = KnownBotList::builtin();
    let mut writer = JsonLines::create(out)?;
    let mut errors = opts.errors_out.as_deref().map(JsonLines::create).transpose()?;
    let mut counts = ParseCounts::default();
    let mut features = FeatureStats::default();
    let mut digests = Vec::with_capacity(inputs.len());
    let mut seq = 0u64;
    for path in inputs {
        let name = path.display().to_string();
        let (mut reader, digest) = open_hashed(path).at(path)?;
        let mut line_no = 0u64;
        loop {
            let batch = read_batch(&mut *reader, path)?;
            if batch.is_empty() {
                break;
            }
            let first_seq = seq;
            seq += batch.len() as u64;
            let parsed: Vec<Result<ArchiveRequest, ParseError>> = batch
                .par_iter()
                .enumerate()
                .map(|(i, bytes)| {
                    let text = decode_lossless(bytes);
                    parse_line(&text, opts.format)
                        .map(|e| classify_path(e, opts.profile).with_seq(first_seq + i as u64))
                })
                .collect();
            let mut records = Vec::with_capacity(parsed.len());
            for (i, p) in parsed.into_iter().enumerate() {
                line_no += 1;
                counts.lines_in += 1;
                match p {
                    Ok(r) => {
                        counts.parsed += 1;
                        features.observe(&r, &si);
                        records.push(Record::new(r));
                    }
                    Err(e) => {
                        counts.errors += 1;
                        if let Some(w) = errors.as_mut() {
                            let text = decode_lossless(&batch[i]);
                            w.write(&BadLine {
                                input: &name,
                                line: line_no,
                                offset: e.offset,
                                reason: e.reason.as_str(),
                                text: &text,
                            })?;
                        }
                    }
                }
            }
            progress.records_in = counts.lines_in;
            writer.write_batch(&records)?;
            progress.records_out = writer.count();
        }
        drop(reader);
        digests.push(InputDigest { path: name, sha256: digest.hex() });
    }
    writer.finish()?;
    if let Some(w) = errors {
        w.finish()?;
    }
    if counts.lines_in == 0 {
        log::warn!("the input contains no log lines");
    }
    if counts.errors > 0 {
        log::warn!("{} of {} lines did not parse", counts.errors, counts.lines_in);
    }
    let manifest = Manifest {
        tool_version: TOOL_VERSION.to_string(),
        stage: "parse".into(),
        fingerprint: parse_fingerprint(&digests, opts.format, opts.profile),
        parent: String::new(),
        records: counts.parsed,
        parse: Some(ParseSection { inputs: digests, format: opts.format, profile: opts.profile, counts, features }),
        ..Manifest::default()
    };
    manifest.write(out)?;
    Ok(manifest)
}

/// Reads up to [`BATCH`] lines without their line terminators.
fn read_batch(reader: &mut dyn BufRead, path: &Path) -> Result<Vec<Vec<u8>>> {
    let mut out = Vec::with_capacity(BATCH);
    while out.len() < BATCH {
        let mut buf = Vec::new();
        if reader.read_until(b'\n', &mut buf).at(path)? == 0 {
            break;
        }
        if buf.last() == Some(&b'\n') {
            buf.pop();
            if buf.last() == Some(&b'\r') {
                buf.pop();
            }
        }
        out.push(buf);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::RecordReader;

    #[test]
    fn counts_are_conserved_and_errors_listed() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.log");
        std::fs::write(
            &a,
            b"128.82.7.3 - - [07/Jul/2019:04:44:14 +0100] \"GET /wayback/20091223043049/http://www.cs.odu.edu/ HTTP/1.1\" 200 9593 \"-\" \"Firefox\"\n\n1.2.3.4 - - [31/Feb/2019:00:00:00 +0000] \"GET / HTTP/1.1\" 200 1\r\n1.2.3.4 - - [07/Jul/2019:04:44:15 +0100] \"GET /a\xff HTTP/1.1\" 404 1 \"-\" \"x\"",
        )
        .unwrap();
        let out = dir.path().join("p.ndjson");
        let errs = dir.path().join("e.jsonl");
        let opts = ParseOptions { errors_out: Some(errs.clone()), ..Default::default() };
        let m = parse_stage(std::slice::from_ref(&a), &opts, &out).unwrap();
        let p = m.parse.as_ref().unwrap();
        assert_eq!((p.counts.lines_in, p.counts.parsed, p.counts.errors), (4, 2, 2));
        assert_eq!(p.inputs[0].sha256, sha256_file(&a).unwrap());
        let recs: Vec<_> = RecordReader::open(&out).unwrap().map(|r| r.unwrap()).collect();
        assert_eq!(recs.iter().map(|r| r.request.seq).collect::<Vec<_>>(), vec![0, 3]);
        assert!(recs[1].request.entry.path.ends_with('\u{10FFFF}'));
        let errs = std::fs::read_to_string(errs).unwrap();
        assert_eq!(errs.lines().count(), 2);
        assert!(errs.contains("\"line\":2") && errs.contains("\"line\":3"));
        assert_eq!(Manifest::read(&out).unwrap(), m);
    }

    #[test]
    fn missing_input_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = parse_stage(&[dir.path().join("nope.log")], &ParseOptions::default(), &dir.path().join("o"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("parse") && err.contains("nope.log"), "{err}");
    }
}
