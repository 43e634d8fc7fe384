//! Temporal preference: how many years before the log date the requested
//! mementos were captured.

use alloc::collections::BTreeMap;
use core::fmt;
use core::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::bot::Subdataset;
use crate::time::MementoDatetime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YearMode {
    /// Difference of calendar years: a 2010 memento is 2 years prior in 2012.
    #[default]
    Calendar,
    /// Whole 365-day periods between the capture date and the reference date.
    /// Leap days accumulate, so this can run a year ahead of the calendar.
    Elapsed,
}

impl YearMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            YearMode::Calendar => "calendar",
            YearMode::Elapsed => "elapsed",
        }
    }
}

impl FromStr for YearMode {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "calendar" => Ok(YearMode::Calendar),
            "elapsed" => Ok(YearMode::Elapsed),
            o => Err(alloc::format!("unknown year mode `{o}` (expected calendar or elapsed)")),
        }
    }
}

impl fmt::Display for YearMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YearsPrior {
    Years(u32),
    Future,
}

pub fn years_prior(memento: MementoDatetime, reference: NaiveDate, mode: YearMode) -> YearsPrior {
    match mode {
        YearMode::Calendar => {
            let diff = i64::from(reference.year()) - i64::from(memento.year());
            u32::try_from(diff).map_or(YearsPrior::Future, YearsPrior::Years)
        }
        YearMode::Elapsed => {
            let days = (reference - memento.date()).num_days();
            u32::try_from(days / 365).ok().filter(|_| days >= 0).map_or(YearsPrior::Future, YearsPrior::Years)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TemporalHistogram {
    pub buckets: BTreeMap<u32, u64>,
    pub discarded_future: u64,
}

impl TemporalHistogram {
    pub fn add(&mut self, y: YearsPrior) {
        match y {
            YearsPrior::Years(n) => *self.buckets.entry(n).or_default() += 1,
            YearsPrior::Future => self.discarded_future += 1,
        }
    }

    pub fn merge(&mut self, other: &TemporalHistogram) {
        for (k, v) in &other.buckets {
            *self.buckets.entry(*k).or_default() += v;
        }
        self.discarded_future += other.discarded_future;
    }

    /// Mementos seen, future ones included.
    pub fn total(&self) -> u64 {
        self.buckets.values().sum::<u64>() + self.discarded_future
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

/// Human and robot histograms against one reference date.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalReport {
    pub reference_date: NaiveDate,
    pub year_mode: YearMode,
    pub human: TemporalHistogram,
    pub robot: TemporalHistogram,
}

impl TemporalReport {
    pub fn new(reference_date: NaiveDate, year_mode: YearMode) -> Self {
        TemporalReport {
            reference_date,
            year_mode,
            human: TemporalHistogram::default(),
            robot: TemporalHistogram::default(),
        }
    }

    pub fn observe(&mut self, subdataset: Subdataset, memento: MementoDatetime) {
        let y = years_prior(memento, self.reference_date, self.year_mode);
        self.get_mut(subdataset).add(y);
    }

    pub fn get(&self, subdataset: Subdataset) -> &TemporalHistogram {
        match subdataset {
            Subdataset::Human => &self.human,
            Subdataset::Robot => &self.robot,
        }
    }

    pub fn get_mut(&mut self, subdataset: Subdataset) -> &mut TemporalHistogram {
        match subdataset {
            Subdataset::Human => &mut self.human,
            Subdataset::Robot => &mut self.robot,
        }
    }

    pub fn combined(&self) -> TemporalHistogram {
        let mut h = self.human.clone();
        h.merge(&self.robot);
        h
    }
}

/// Most frequent date; ties go to the earliest.
#[derive(Debug, Clone, Default)]
pub struct ModalDate {
    counts: BTreeMap<NaiveDate, u64>,
}

impl ModalDate {
    pub fn observe(&mut self, date: NaiveDate) {
        *self.counts.entry(date).or_default() += 1;
    }

    pub fn merge(&mut self, other: &ModalDate) {
        for (d, n) in &other.counts {
            *self.counts.entry(*d).or_default() += n;
        }
    }

    pub fn mode(&self) -> Option<NaiveDate> {
        let mut best: Option<(NaiveDate, u64)> = None;
        for (d, n) in &self.counts {
            if best.is_none_or(|(_, b)| *n > b) {
                best = Some((*d, *n));
            }
        }
        best.map(|(d, _)| d)
    }
}
