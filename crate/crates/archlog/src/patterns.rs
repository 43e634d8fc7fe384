//! Access-pattern mining over the stage-2 record stream.

use std::path::{Path, PathBuf};

use archlog_core::bot::Subdataset;
use archlog_core::pattern::{classify_accesses, Access, AccessKind, DiveWindow, Pattern, PatternDistribution};
use archlog_core::record::Record;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Progress, Result};
use crate::manifest::Manifest;
use crate::records::{JsonLines, RecordReader};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternsOutput {
    pub dive_window_secs: u64,
    pub distribution: PatternDistribution,
}

#[derive(Serialize)]
struct LabelLine<'a> {
    session_id: &'a str,
    subdataset: Subdataset,
    label: Pattern,
    slide: bool,
    dive: bool,
    skim: bool,
    mementos: u64,
    timemaps: u64,
}

pub fn patterns_stage(
    input: &Path,
    out: &Path,
    window: DiveWindow,
    labels_out: Option<&PathBuf>,
) -> Result<(Manifest, PatternsOutput)> {
    let mut progress = Progress::default();
    run(input, out, window, labels_out, &mut progress).map_err(|e| e.in_stage("patterns", progress))
}

struct Current {
    id: String,
    subdataset: Subdataset,
    accesses: Vec<(AccessKind, String, i64)>,
}

fn run(
    input: &Path,
    out: &Path,
    window: DiveWindow,
    labels_out: Option<&PathBuf>,
    progress: &mut Progress,
) -> Result<(Manifest, PatternsOutput)> {
    let upstream = Manifest::read_or_empty(input)?;
    let mut reader = RecordReader::open(input)?;
    let mut labels = labels_out.map(|p| JsonLines::create(p)).transpose()?;
    let mut dist = PatternDistribution::default();
    let mut cur: Option<Current> = None;
    let mut skipped = 0u64;
    while let Some(r) = reader.next_record()? {
        progress.records_in += 1;
        let (id, sub) = identity(&r, input, reader.lines_read())?;
        if cur.as_ref().is_none_or(|c| c.id != id) {
            if let Some(c) = cur.take() {
                finish(c, window, &mut dist, labels.as_mut())?;
                progress.records_out += 1;
            }
            cur = Some(Current { id: id.to_string(), subdataset: sub, accesses: Vec::new() });
        }
        let Some(a) = Access::of(&r.request) else {
            skipped += 1;
            continue;
        };
        if let Some(c) = cur.as_mut() {
            c.accesses.push((a.kind, a.uri_r.to_string(), a.datetime));
        }
    }
    if let Some(c) = cur.take() {
        finish(c, window, &mut dist, labels.as_mut())?;
        progress.records_out += 1;
    }
    if skipped > 0 {
        log::warn!("{skipped} records were neither mementos nor TimeMaps and were not labelled");
    }
    if let Some(l) = labels {
        l.finish()?;
    }
    let output = PatternsOutput { dive_window_secs: window.secs(), distribution: dist };
    write_json(out, &output)?;
    let mut m = upstream.derive("patterns", &window.secs());
    m.records = progress.records_out;
    m.write(out)?;
    Ok((m, output))
}

fn identity<'a>(r: &'a Record, input: &Path, line: u64) -> Result<(&'a str, Subdataset)> {
    match (r.session_id.as_deref(), r.verdict) {
        (Some(id), Some(v)) => Ok((id, v.subdataset())),
        _ => Err(Error::BadInput {
            path: input.into(),
            message: format!("record {line} has no session id or robot verdict; run sessionize and detect first"),
        }),
    }
}

fn finish(c: Current, window: DiveWindow, dist: &mut PatternDistribution, labels: Option<&mut JsonLines>) -> Result<()> {
    if c.accesses.is_empty() {
        return Ok(());
    }
    let accesses: Vec<Access<'_>> =
        c.accesses.iter().map(|(k, u, d)| Access { kind: *k, uri_r: u, datetime: *d }).collect();
    let label = classify_accesses(&accesses, window);
    dist.observe_session(c.subdataset, label.label, &accesses);
    if let Some(l) = labels {
        let tm = accesses.iter().filter(|a| a.kind == AccessKind::Timemap).count() as u64;
        l.write(&LabelLine {
            session_id: &c.id,
            subdataset: c.subdataset,
            label: label.label,
            slide: label.base_flags.slide,
            dive: label.base_flags.dive,
            skim: label.base_flags.skim,
            mementos: accesses.len() as u64 - tm,
            timemaps: tm,
        })?;
    }
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut v = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::BadInput { path: path.into(), message: e.to_string() })?;
    v.push(b'\n');
    crate::io::write_file(path, &v).map_err(|source| Error::Io { path: path.into(), source })
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read(path).map_err(|source| Error::Io { path: path.into(), source })?;
    serde_json::from_slice(&text).map_err(|e| Error::BadInput { path: path.into(), message: e.to_string() })
}
