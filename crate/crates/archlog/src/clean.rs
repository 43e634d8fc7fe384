//! The two cleaning stages over a record stream.

use std::path::Path;

use archlog_core::cleaning::{stage1_keep, stage2_keep};
use archlog_core::ratio::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Progress, Result};
use crate::manifest::{CleanSection, Manifest};
use crate::records::{JsonLines, RecordReader, BATCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CleanStage {
    One,
    Two,
}

impl CleanStage {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(CleanStage::One),
            2 => Some(CleanStage::Two),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CleanStage::One => "clean1",
            CleanStage::Two => "clean2",
        }
    }
}

pub fn clean_stage(input: &Path, out: &Path, stage: CleanStage) -> Result<Manifest> {
    let mut progress = Progress::default();
    run(input, out, stage, &mut progress).map_err(|e| e.in_stage(stage.name(), progress))
}

fn run(input: &Path, out: &Path, stage: CleanStage, progress: &mut Progress) -> Result<Manifest> {
    let upstream = Manifest::read_or_empty(input)?;
    let keep = match stage {
        CleanStage::One => stage1_keep,
        CleanStage::Two => stage2_keep,
    };
    let mut reader = RecordReader::open(input)?;
    let mut writer = JsonLines::create(out)?;
    let mut batch = Vec::with_capacity(BATCH);
    let mut unlabelled = false;
    while let Some(r) = reader.next_record()? {
        progress.records_in += 1;
        if stage == CleanStage::Two && r.verdict.is_none() && !unlabelled {
            unlabelled = true;
            log::warn!("{}: stage 2 input has records without a robot verdict", input.display());
        }
        if keep(&r.request) {
            batch.push(r);
            if batch.len() == BATCH {
                writer.write_batch(&batch)?;
                batch.clear();
                progress.records_out = writer.count();
            }
        }
    }
    writer.write_batch(&batch)?;
    let kept = writer.finish()?;
    progress.records_out = kept;
    let mut m = upstream.derive(stage.name(), &());
    m.records = kept;
    let section = Some(CleanSection { input: progress.records_in, kept });
    match stage {
        CleanStage::One => m.clean1 = section,
        CleanStage::Two => m.clean2 = section,
    }
    m.write(out)?;
    Ok(m)
}

/// Table-2 shaped counts known so far. Ratios are against the parsed count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningSummary {
    pub raw_count: u64,
    pub stage1: Option<Ratio>,
    pub stage2: Option<Ratio>,
}

impl CleaningSummary {
    pub fn of(m: &Manifest) -> Self {
        let raw = m.parse.as_ref().map_or(0, |p| p.counts.parsed);
        CleaningSummary {
            raw_count: raw,
            stage1: m.clean1.map(|c| Ratio::new(c.kept, raw)),
            stage2: m.clean2.map(|c| Ratio::new(c.kept, raw)),
        }
    }

    /// JSON when the path ends in `.json`, CSV otherwise.
    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = if path.extension().is_some_and(|e| e == "json") {
            let mut v = serde_json::to_vec_pretty(self).map_err(|e| bad(path, e))?;
            v.push(b'\n');
            v
        } else {
            let mut w = csv::Writer::from_writer(Vec::new());
            let cell = |r: Option<Ratio>| r.map(|r| (r.count.to_string(), r.percent())).unwrap_or_default();
            let (s1, p1) = cell(self.stage1);
            let (s2, p2) = cell(self.stage2);
            w.write_record(["raw", "stage1", "stage1_percent", "stage2", "stage2_percent"]).map_err(|e| bad(path, e))?;
            w.write_record([&self.raw_count.to_string(), &s1, &p1, &s2, &p2]).map_err(|e| bad(path, e))?;
            w.into_inner().map_err(|e| bad(path, e))?
        };
        crate::io::write_file(path, &bytes).map_err(|source| Error::Io { path: path.into(), source })
    }
}

fn bad(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::BadInput { path: path.into(), message: e.to_string() }
}
