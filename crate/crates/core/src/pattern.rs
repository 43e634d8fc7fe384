//! Access patterns of cleaned sessions.
//!
//! * Dip: the session has exactly one request.
//! * Slide: one URI-R is requested at two or more Memento-Datetimes.
//! * Dive: two different URI-Rs are requested at Memento-Datetimes no more
//!   than the dive window apart.
//! * Skim: two or more different TimeMaps are requested.
//!
//! Slide, Dive and Skim can co-occur; their combination names a hybrid. A
//! multi-request session with none of them is Unknown. A TimeMap is
//! identified by its URI-R.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::archive::{ArchiveRequest, RequestKind};
use crate::bot::Subdataset;
use crate::ratio::Ratio;

/// Maximum Memento-Datetime distance for a Dive, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiveWindow(u64);

impl DiveWindow {
    pub const DEFAULT: DiveWindow = DiveWindow(24 * 3600);

    pub fn from_secs(secs: u64) -> Option<Self> {
        (secs > 0).then_some(DiveWindow(secs))
    }

    pub fn from_hours(hours: u64) -> Option<Self> {
        hours.checked_mul(3600).and_then(DiveWindow::from_secs)
    }

    pub fn secs(&self) -> u64 {
        self.0
    }
}

impl Default for DiveWindow {
    fn default() -> Self {
        DiveWindow::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AccessKind {
    Memento,
    Timemap,
}

/// What the pattern detectors look at in one request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Access<'a> {
    pub kind: AccessKind,
    pub uri_r: &'a str,
    /// Memento-Datetime in epoch seconds; ignored for TimeMaps.
    pub datetime: i64,
}

impl<'a> Access<'a> {
    pub fn memento(uri_r: &'a str, datetime: i64) -> Self {
        Access { kind: AccessKind::Memento, uri_r, datetime }
    }

    pub fn timemap(uri_r: &'a str) -> Self {
        Access { kind: AccessKind::Timemap, uri_r, datetime: 0 }
    }

    /// `None` for requests that are neither mementos nor TimeMaps.
    pub fn of(request: &'a ArchiveRequest) -> Option<Self> {
        let uri = request.uri_r.as_deref()?;
        match request.kind {
            RequestKind::Memento => Some(Access::memento(uri, request.memento_datetime?.epoch_seconds())),
            RequestKind::Timemap => Some(Access::timemap(uri)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pattern {
    Dip,
    Slide,
    Dive,
    Skim,
    DiveSlide,
    DiveSkim,
    SkimSlide,
    DiveSlideSkim,
    Unknown,
}

impl Pattern {
    pub const ALL: [Pattern; 9] = [
        Pattern::Dip,
        Pattern::Slide,
        Pattern::Dive,
        Pattern::Skim,
        Pattern::DiveSlide,
        Pattern::DiveSkim,
        Pattern::SkimSlide,
        Pattern::DiveSlideSkim,
        Pattern::Unknown,
    ];

    pub fn from_flags(flags: BaseFlags) -> Pattern {
        match (flags.dive, flags.slide, flags.skim) {
            (false, false, false) => Pattern::Unknown,
            (false, true, false) => Pattern::Slide,
            (true, false, false) => Pattern::Dive,
            (false, false, true) => Pattern::Skim,
            (true, true, false) => Pattern::DiveSlide,
            (true, false, true) => Pattern::DiveSkim,
            (false, true, true) => Pattern::SkimSlide,
            (true, true, true) => Pattern::DiveSlideSkim,
        }
    }

    /// The base flags a label stands for. Dip and Unknown have none.
    pub fn flags(self) -> BaseFlags {
        let (dive, slide, skim) = match self {
            Pattern::Dip | Pattern::Unknown => (false, false, false),
            Pattern::Slide => (false, true, false),
            Pattern::Dive => (true, false, false),
            Pattern::Skim => (false, false, true),
            Pattern::DiveSlide => (true, true, false),
            Pattern::DiveSkim => (true, false, true),
            Pattern::SkimSlide => (false, true, true),
            Pattern::DiveSlideSkim => (true, true, true),
        };
        BaseFlags { slide, dive, skim }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::Dip => "Dip",
            Pattern::Slide => "Slide",
            Pattern::Dive => "Dive",
            Pattern::Skim => "Skim",
            Pattern::DiveSlide => "DiveSlide",
            Pattern::DiveSkim => "DiveSkim",
            Pattern::SkimSlide => "SkimSlide",
            Pattern::DiveSlideSkim => "DiveSlideSkim",
            Pattern::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pattern {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| alloc::format!("unknown pattern `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BaseFlags {
    pub slide: bool,
    pub dive: bool,
    pub skim: bool,
}

impl BaseFlags {
    pub fn is_empty(&self) -> bool {
        !(self.slide || self.dive || self.skim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternLabel {
    pub base_flags: BaseFlags,
    pub is_dip: bool,
    pub label: Pattern,
}

pub fn detect_slide(accesses: &[Access<'_>]) -> bool {
    let mut m: Vec<(&str, i64)> = accesses
        .iter()
        .filter(|a| a.kind == AccessKind::Memento)
        .map(|a| (a.uri_r, a.datetime))
        .collect();
    m.sort_unstable();
    m.windows(2).any(|w| w[0].0 == w[1].0 && w[0].1 != w[1].1)
}

pub fn detect_dive(accesses: &[Access<'_>], window: DiveWindow) -> bool {
    let mut m: Vec<(i64, &str)> = accesses
        .iter()
        .filter(|a| a.kind == AccessKind::Memento)
        .map(|a| (a.datetime, a.uri_r))
        .collect();
    if m.len() < 2 {
        return false;
    }
    m.sort_unstable();
    // next_diff[i]: first index after i whose URI-R differs from m[i]
    let n = m.len();
    let mut next_diff = alloc::vec![n; n];
    for i in (0..n - 1).rev() {
        next_diff[i] = if m[i + 1].1 != m[i].1 { i + 1 } else { next_diff[i + 1] };
    }
    let w = i128::from(window.secs());
    (0..n).any(|i| next_diff[i] < n && i128::from(m[next_diff[i]].0) - i128::from(m[i].0) <= w)
}

pub fn detect_skim(accesses: &[Access<'_>]) -> bool {
    let mut first: Option<&str> = None;
    for a in accesses.iter().filter(|a| a.kind == AccessKind::Timemap) {
        match first {
            None => first = Some(a.uri_r),
            Some(u) if u != a.uri_r => return true,
            Some(_) => {}
        }
    }
    false
}

pub fn classify_accesses(accesses: &[Access<'_>], window: DiveWindow) -> PatternLabel {
    if accesses.len() == 1 {
        return PatternLabel { base_flags: BaseFlags::default(), is_dip: true, label: Pattern::Dip };
    }
    let base_flags = BaseFlags {
        slide: detect_slide(accesses),
        dive: detect_dive(accesses, window),
        skim: detect_skim(accesses),
    };
    PatternLabel { base_flags, is_dip: false, label: Pattern::from_flags(base_flags) }
}

/// Labels a cleaned session given its surviving requests. Requests that are
/// neither mementos nor TimeMaps are ignored. `None` if nothing survives.
pub fn classify_pattern<'a, I>(requests: I, window: DiveWindow) -> Option<PatternLabel>
where
    I: IntoIterator<Item = &'a ArchiveRequest>,
{
    let accesses: Vec<Access<'a>> = requests.into_iter().filter_map(Access::of).collect();
    (!accesses.is_empty()).then(|| classify_accesses(&accesses, window))
}

/// Per-label counts within one subdataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub sessions: u64,
    pub requests: u64,
    pub mementos: u64,
    pub timemaps: u64,
}

impl LabelCounts {
    fn add(&mut self, o: &LabelCounts) {
        self.sessions += o.sessions;
        self.requests += o.requests;
        self.mementos += o.mementos;
        self.timemaps += o.timemaps;
    }
}

/// Session and request counts per (subdataset, label).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PatternDistribution {
    pub counts: [[LabelCounts; 9]; 2],
}

impl PatternDistribution {
    pub fn observe(&mut self, subdataset: Subdataset, label: Pattern, mementos: u64, timemaps: u64) {
        let c = &mut self.counts[subdataset.index()][label.index()];
        c.sessions += 1;
        c.requests += mementos + timemaps;
        c.mementos += mementos;
        c.timemaps += timemaps;
    }

    /// Adds a session given its surviving requests.
    pub fn observe_session(&mut self, subdataset: Subdataset, label: Pattern, requests: &[Access<'_>]) {
        let tm = requests.iter().filter(|a| a.kind == AccessKind::Timemap).count() as u64;
        self.observe(subdataset, label, requests.len() as u64 - tm, tm);
    }

    pub fn merge(&mut self, other: &PatternDistribution) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                x.add(y);
            }
        }
    }

    pub fn get(&self, subdataset: Subdataset, label: Pattern) -> LabelCounts {
        self.counts[subdataset.index()][label.index()]
    }

    pub fn total(&self, subdataset: Subdataset) -> LabelCounts {
        let mut t = LabelCounts::default();
        for c in &self.counts[subdataset.index()] {
            t.add(c);
        }
        t
    }

    /// Share of the subdataset's requests that carry `label`.
    pub fn request_share(&self, subdataset: Subdataset, label: Pattern) -> Ratio {
        Ratio::new(self.get(subdataset, label).requests, self.total(subdataset).requests)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DAY: i64 = 86_400;

    fn label(a: &[Access<'_>]) -> Pattern {
        classify_accesses(a, DiveWindow::DEFAULT).label
    }

    /// Tests the definitions literally over all pairs.
    fn oracle(a: &[Access<'_>], window: i64) -> Pattern {
        if a.len() == 1 {
            return Pattern::Dip;
        }
        let mut slide = false;
        let mut dive = false;
        let mut skim = false;
        for x in a {
            for y in a {
                match (x.kind, y.kind) {
                    (AccessKind::Memento, AccessKind::Memento) => {
                        slide |= x.uri_r == y.uri_r && x.datetime != y.datetime;
                        dive |= x.uri_r != y.uri_r && (x.datetime - y.datetime).abs() <= window;
                    }
                    (AccessKind::Timemap, AccessKind::Timemap) => skim |= x.uri_r != y.uri_r,
                    _ => {}
                }
            }
        }
        Pattern::from_flags(BaseFlags { slide, dive, skim })
    }

    #[test]
    fn slide_examples() {
        let d1 = 1_261_542_649;
        let d2 = 1_325_721_600;
        assert!(detect_slide(&[Access::memento("R1", d1), Access::memento("R1", d2)]));
        assert!(!detect_slide(&[Access::memento("R1", d1), Access::memento("R1", d1)]));
        assert!(!detect_slide(&[Access::memento("R1", d1), Access::memento("R2", d2)]));
    }

    #[test]
    fn dive_examples() {
        let t = 1_549_498_680; // 2019-02-07T00:18
        assert!(detect_dive(&[Access::memento("R1", t), Access::memento("R2", t + 22 * 60)], DiveWindow::DEFAULT));
        assert!(!detect_dive(
            &[Access::memento("R1", 1_262_304_000), Access::memento("R2", 1_420_070_400)],
            DiveWindow::DEFAULT
        ));
        assert!(!detect_dive(&[Access::memento("R1", t), Access::memento("R1", t)], DiveWindow::DEFAULT));
        assert!(detect_dive(&[Access::memento("R1", 0), Access::memento("R2", DAY)], DiveWindow::DEFAULT));
        assert!(!detect_dive(&[Access::memento("R1", 0), Access::memento("R2", DAY + 1)], DiveWindow::DEFAULT));
    }

    #[test]
    fn skim_examples() {
        assert!(detect_skim(&[Access::timemap("R1"), Access::timemap("R2")]));
        assert!(!detect_skim(&[Access::timemap("R1")]));
        assert!(!detect_skim(&[Access::timemap("R1"); 5]));
    }

    #[test]
    fn labels() {
        assert_eq!(label(&[Access::timemap("R1")]), Pattern::Dip);
        assert_eq!(label(&[Access::memento("R1", 0)]), Pattern::Dip);
        let d1 = 0;
        let d2 = 3 * 365 * DAY;
        assert_eq!(
            label(&[Access::memento("R1", d1), Access::memento("R2", d1), Access::memento("R1", d2)]),
            Pattern::DiveSlide
        );
        assert_eq!(label(&[Access::memento("R1", 0), Access::memento("R2", 5 * 365 * DAY)]), Pattern::Unknown);
        assert_eq!(label(&[Access::timemap("R1"), Access::timemap("R1")]), Pattern::Unknown);
        assert_eq!(label(&[Access::timemap("R1"), Access::memento("R1", 0), Access::memento("R1", 9)]), Pattern::Slide);
    }

    #[test]
    fn label_flag_round_trip() {
        for p in Pattern::ALL {
            if p != Pattern::Dip {
                assert_eq!(Pattern::from_flags(p.flags()), p);
            }
            assert_eq!(p.as_str().parse::<Pattern>().unwrap(), p);
        }
    }

    #[test]
    fn oracle_agrees_on_small_universe() {
        let uris = ["R1", "R2", "R3"];
        let times = [0, DAY / 2, -4 * 365 * DAY];
        let mut universe = Vec::new();
        for u in uris {
            for t in times {
                universe.push(Access::memento(u, t));
            }
            universe.push(Access::timemap(u));
        }
        let mut seq = Vec::new();
        fn walk(u: &[Access<'static>], seq: &mut Vec<Access<'static>>, depth: usize, n: &mut u64) {
            if !seq.is_empty() {
                assert_eq!(label(seq), oracle(seq, DAY), "{seq:?}");
                *n += 1;
            }
            if depth == 0 {
                return;
            }
            for a in u {
                seq.push(*a);
                walk(u, seq, depth - 1, n);
                seq.pop();
            }
        }
        let mut n = 0;
        walk(&universe, &mut seq, 4, &mut n);
        assert_eq!(n, 12 + 144 + 1728 + 20736);
    }

    #[test]
    fn distribution_partitions_requests() {
        let mut d = PatternDistribution::default();
        d.observe_session(Subdataset::Human, Pattern::Dip, &[Access::timemap("R")]);
        d.observe_session(Subdataset::Human, Pattern::Slide, &[Access::memento("R", 0), Access::memento("R", 5)]);
        assert_eq!(d.total(Subdataset::Human).requests, 3);
        assert_eq!(d.request_share(Subdataset::Human, Pattern::Slide).percent(), "66.67%");
        assert_eq!(d.get(Subdataset::Human, Pattern::Dip).timemaps, 1);
        assert_eq!(d.total(Subdataset::Robot), LabelCounts::default());
        let mut e = d.clone();
        e.merge(&d);
        assert_eq!(e.total(Subdataset::Human).sessions, 4);
    }

    fn arb_access() -> impl Strategy<Value = (bool, u8, i64)> {
        (any::<bool>(), 0u8..4, prop_oneof![0i64..3, 0i64..400_000, -100_000_000i64..100_000_000])
    }

    fn build(raw: &[(bool, u8, i64)]) -> Vec<Access<'static>> {
        const U: [&str; 4] = ["a", "b", "c", "d"];
        raw.iter()
            .map(|&(m, u, t)| if m { Access::memento(U[u as usize], t) } else { Access::timemap(U[u as usize]) })
            .collect()
    }

    proptest! {
        #[test]
        fn matches_oracle(raw in prop::collection::vec(arb_access(), 1..12), w in 1i64..200_000) {
            let a = build(&raw);
            let window = DiveWindow::from_secs(w as u64).unwrap();
            prop_assert_eq!(classify_accesses(&a, window).label, oracle(&a, w));
        }

        #[test]
        fn permutation_invariant(raw in prop::collection::vec(arb_access(), 1..12), seed in any::<u64>()) {
            let a = build(&raw);
            let mut b = a.clone();
            let n = b.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                b.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(label(&a), label(&b));
        }

        #[test]
        fn adding_requests_keeps_flags(raw in prop::collection::vec(arb_access(), 2..10), extra in arb_access()) {
            let a = build(&raw);
            let mut b = a.clone();
            b.extend(build(&[extra]));
            let fa = classify_accesses(&a, DiveWindow::DEFAULT).base_flags;
            let fb = classify_accesses(&b, DiveWindow::DEFAULT).base_flags;
            prop_assert!(!fa.slide || fb.slide);
            prop_assert!(!fa.dive || fb.dive);
            prop_assert!(!fa.skim || fb.skim);
        }

        #[test]
        fn label_invariants(raw in prop::collection::vec(arb_access(), 1..10)) {
            let l = classify_accesses(&build(&raw), DiveWindow::DEFAULT);
            prop_assert_eq!(l.is_dip, raw.len() == 1);
            prop_assert!(!l.is_dip || l.base_flags.is_empty());
            prop_assert_eq!(l.label == Pattern::Unknown, !l.is_dip && l.base_flags.is_empty());
        }
    }
}
