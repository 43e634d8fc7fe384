//! Log timestamps (`dd/Mon/yyyy:HH:MM:SS ±zzzz`) and Memento-Datetime stamps
//! (`yyyymmddHHMMSS`).

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use chrono::{DateTime, Datelike, FixedOffset, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ParseError, Reason};

const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

/// The instant a request was logged, with the offset it was logged in.
///
/// Ordering and equality compare the UTC instant *and* the offset, so two
/// lines logged at the same instant in different zones are distinct values;
/// use [`LogTime::epoch_seconds`] for time arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LogTime(DateTime<FixedOffset>);

impl LogTime {
    pub fn new(dt: DateTime<FixedOffset>) -> Self {
        LogTime(dt)
    }

    pub fn datetime(&self) -> DateTime<FixedOffset> {
        self.0
    }

    /// Seconds since the Unix epoch (UTC).
    pub fn epoch_seconds(&self) -> i64 {
        self.0.timestamp()
    }

    pub fn utc(&self) -> NaiveDateTime {
        self.0.naive_utc()
    }

    /// Calendar date as logged, in the line's own offset.
    pub fn local_date(&self) -> NaiveDate {
        self.0.date_naive()
    }

    /// Offset from UTC in seconds (east positive).
    pub fn offset_seconds(&self) -> i32 {
        self.0.offset().local_minus_utc()
    }
}

impl fmt::Display for LogTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.0;
        let off = self.offset_seconds();
        let sign = if off < 0 { '-' } else { '+' };
        let off = off.unsigned_abs();
        write!(
            f,
            "{:02}/{}/{:04}:{:02}:{:02}:{:02} {}{:02}{:02}",
            d.day(),
            MONTHS[d.month0() as usize],
            d.year(),
            d.hour(),
            d.minute(),
            d.second(),
            sign,
            off / 3600,
            (off % 3600) / 60
        )
    }
}

impl FromStr for LogTime {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_clf_timestamp(s)
    }
}

impl Serialize for LogTime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LogTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(d)?;
        parse_clf_timestamp(&s).map_err(serde::de::Error::custom)
    }
}

fn digits(b: &[u8], at: usize, len: usize) -> Result<u32, ParseError> {
    let mut v = 0u32;
    for i in at..at + len {
        match b.get(i) {
            Some(c) if c.is_ascii_digit() => v = v * 10 + u32::from(c - b'0'),
            _ => return Err(ParseError::new(i, Reason::BadTimestamp)),
        }
    }
    Ok(v)
}

fn expect(b: &[u8], at: usize, c: u8) -> Result<(), ParseError> {
    if b.get(at) == Some(&c) {
        Ok(())
    } else {
        Err(ParseError::new(at, Reason::BadTimestamp))
    }
}

/// Parses the bracket contents of a CLF timestamp, e.g.
/// `07/Jul/2019:04:44:14 +0100`.
pub fn parse_clf_timestamp(token: &str) -> Result<LogTime, ParseError> {
    let b = token.as_bytes();
    if b.len() != 26 {
        return Err(ParseError::new(b.len().min(26), Reason::BadTimestamp));
    }
    let day = digits(b, 0, 2)?;
    expect(b, 2, b'/')?;
    let month = MONTHS
        .iter()
        .position(|m| m.as_bytes() == &b[3..6])
        .ok_or(ParseError::new(3, Reason::UnknownMonth))? as u32
        + 1;
    expect(b, 6, b'/')?;
    let year = digits(b, 7, 4)?;
    expect(b, 11, b':')?;
    let hour = digits(b, 12, 2)?;
    expect(b, 14, b':')?;
    let minute = digits(b, 15, 2)?;
    expect(b, 17, b':')?;
    let second = digits(b, 18, 2)?;
    expect(b, 20, b' ')?;
    let sign = match b[21] {
        b'+' => 1,
        b'-' => -1,
        _ => return Err(ParseError::new(21, Reason::BadOffset)),
    };
    let oh = digits(b, 22, 2).map_err(|e| ParseError::new(e.offset, Reason::BadOffset))?;
    let om = digits(b, 24, 2).map_err(|e| ParseError::new(e.offset, Reason::BadOffset))?;
    if om >= 60 {
        return Err(ParseError::new(24, Reason::BadOffset));
    }
    let offset = FixedOffset::east_opt(sign * (oh * 3600 + om * 60) as i32)
        .ok_or(ParseError::new(21, Reason::BadOffset))?;
    let date = NaiveDate::from_ymd_opt(year as i32, month, day).ok_or(ParseError::new(0, Reason::InvalidDate))?;
    let time = NaiveTime::from_hms_opt(hour, minute, second).ok_or(ParseError::new(12, Reason::InvalidDate))?;
    let local = NaiveDateTime::new(date, time);
    let utc = local - offset;
    Ok(LogTime(DateTime::from_naive_utc_and_offset(utc, offset)))
}

/// A Memento-Datetime, always UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MementoDatetime(NaiveDateTime);

impl MementoDatetime {
    pub fn new(dt: NaiveDateTime) -> Self {
        MementoDatetime(dt)
    }

    pub fn naive(&self) -> NaiveDateTime {
        self.0
    }

    pub fn epoch_seconds(&self) -> i64 {
        self.0.and_utc().timestamp()
    }

    pub fn year(&self) -> i32 {
        self.0.year()
    }

    pub fn date(&self) -> NaiveDate {
        self.0.date()
    }

    /// The canonical 14-digit stamp.
    pub fn to_stamp(&self) -> String {
        alloc::format!("{}", self)
    }
}

impl fmt::Display for MementoDatetime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.0;
        write!(
            f,
            "{:04}{:02}{:02}{:02}{:02}{:02}",
            d.year(),
            d.month(),
            d.day(),
            d.hour(),
            d.minute(),
            d.second()
        )
    }
}

impl Serialize for MementoDatetime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MementoDatetime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(d)?;
        parse_memento_datetime(&s).map_err(serde::de::Error::custom)
    }
}

// Missing trailing components take the earliest valid value.
const STAMP_PAD: &[u8; 14] = b"00000101000000";

/// Parses a 4 to 14 digit Memento-Datetime stamp. Shorter stamps are
/// zero-extended: `2019` is `20190101000000`, `201902` is `20190201000000`.
pub fn parse_memento_datetime(stamp: &str) -> Result<MementoDatetime, ParseError> {
    let b = stamp.as_bytes();
    if b.len() < 4 || b.len() > 14 {
        return Err(ParseError::new(0, Reason::BadStamp));
    }
    if let Some(i) = b.iter().position(|c| !c.is_ascii_digit()) {
        return Err(ParseError::new(i, Reason::BadStamp));
    }
    let mut full = *STAMP_PAD;
    full[..b.len()].copy_from_slice(b);
    let n = |at: usize, len: usize| -> u32 {
        full[at..at + len].iter().fold(0u32, |acc, c| acc * 10 + u32::from(c - b'0'))
    };
    let date = NaiveDate::from_ymd_opt(n(0, 4) as i32, n(4, 2), n(6, 2)).ok_or(ParseError::new(4, Reason::BadStamp))?;
    let time = NaiveTime::from_hms_opt(n(8, 2), n(10, 2), n(12, 2)).ok_or(ParseError::new(8, Reason::BadStamp))?;
    Ok(MementoDatetime(NaiveDateTime::new(date, time)))
}
