//! Core analysis of web archive access logs.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It covers the
//! whole analytical path from a raw log line to report tables:
//!
//! * [`entry`] parses Common/Combined Log Format lines, including the extended
//!   layouts written by archive front ends (leading vhost, trailing timing and
//!   content-type fields).
//! * [`archive`] recognizes replay URLs and extracts the original resource
//!   (URI-R), the Memento-Datetime, and the resource class.
//! * [`cleaning`] holds the two filtering stages.
//! * [`session`] groups requests per user and splits them on inactivity.
//! * [`bot`] implements the six robot heuristics.
//! * [`pattern`] labels sessions as Dip, Slide, Dive, Skim, a hybrid, or Unknown.
//! * [`temporal`] builds years-prior histograms of requested mementos.
//! * [`features`] and [`report`] produce the aggregate tables.
//! * [`synth`] generates labelled corpora for end-to-end testing.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod archive;
pub mod bot;
pub mod cleaning;
pub mod entry;
pub mod error;
pub mod features;
pub mod pattern;
pub mod ratio;
pub mod record;
pub mod report;
pub mod session;
pub mod synth;
pub mod temporal;
pub mod text;
pub mod time;

pub use archive::{classify_path, ArchiveProfile, ArchiveRequest, RequestKind, ResourceClass};
pub use bot::{BotVerdict, KnownBotList, Thresholds};
pub use entry::{parse_line, FormatHint, LogEntry, Method};
pub use error::{ParseError, Reason};
pub use pattern::{Pattern, PatternLabel};
pub use session::{Session, Timeout, UserKey};
