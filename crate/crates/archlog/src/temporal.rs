//! Temporal preference over the stage-2 record stream.

use std::collections::BTreeMap;
use std::path::Path;

use archlog_core::bot::Subdataset;
use archlog_core::temporal::{years_prior, ModalDate, TemporalReport, YearMode, YearsPrior};
use archlog_core::time::MementoDatetime;
use archlog_core::RequestKind;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Progress, Result};
use crate::manifest::Manifest;
use crate::patterns::write_json;
use crate::records::RecordReader;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalOutput {
    pub year_mode: YearMode,
    pub reference_date_override: Option<NaiveDate>,
    /// Most frequent local log date among the records.
    pub modal_date: Option<NaiveDate>,
    /// Absent when there is no reference date (no records, no override).
    pub report: Option<TemporalReport>,
}

#[derive(Serialize)]
pub struct TemporalSettings {
    pub year_mode: YearMode,
    pub reference_date: Option<NaiveDate>,
}

pub fn temporal_stage(
    input: &Path,
    out: &Path,
    year_mode: YearMode,
    reference_date: Option<NaiveDate>,
) -> Result<(Manifest, TemporalOutput)> {
    let mut progress = Progress::default();
    run(input, out, year_mode, reference_date, &mut progress).map_err(|e| e.in_stage("temporal", progress))
}

fn run(
    input: &Path,
    out: &Path,
    year_mode: YearMode,
    reference_date: Option<NaiveDate>,
    progress: &mut Progress,
) -> Result<(Manifest, TemporalOutput)> {
    let upstream = Manifest::read_or_empty(input)?;
    let mut modal = ModalDate::default();
    // counts per capture date; years-prior needs the reference date, which
    // is only known at the end
    let mut by_date: BTreeMap<(Subdataset, NaiveDate), u64> = BTreeMap::new();
    let mut reader = RecordReader::open(input)?;
    while let Some(r) = reader.next_record()? {
        progress.records_in += 1;
        let Some(v) = r.verdict else {
            return Err(Error::BadInput {
                path: input.into(),
                message: format!("record {} has no robot verdict; run detect first", reader.lines_read()),
            });
        };
        modal.observe(r.request.entry.timestamp.local_date());
        if r.request.kind == RequestKind::Memento {
            if let Some(m) = r.request.memento_datetime {
                *by_date.entry((v.subdataset(), m.date())).or_default() += 1;
                progress.records_out += 1;
            }
        }
    }
    let modal_date = modal.mode();
    let report = reference_date.or(modal_date).map(|reference| {
        let mut rep = TemporalReport::new(reference, year_mode);
        for ((sub, date), n) in &by_date {
            let m = MementoDatetime::new(date.and_time(chrono::NaiveTime::MIN));
            let h = rep.get_mut(*sub);
            match years_prior(m, reference, year_mode) {
                YearsPrior::Years(y) => *h.buckets.entry(y).or_default() += n,
                YearsPrior::Future => h.discarded_future += n,
            }
        }
        rep
    });
    let output = TemporalOutput { year_mode, reference_date_override: reference_date, modal_date, report };
    write_json(out, &output)?;
    let mut m = upstream.derive("temporal", &TemporalSettings { year_mode, reference_date });
    m.records = progress.records_out;
    m.write(out)?;
    Ok((m, output))
}
