//! Session identification.
//!
//! A user is an (IP token, User-Agent) pair. A user's requests, ordered by
//! timestamp and then input position, are cut into a new session whenever
//! the gap to the previous request is strictly longer than the timeout.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::archive::{ArchiveRequest, RequestKind, ResourceClass};

/// Inactivity timeout in seconds. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Timeout(u64);

impl Timeout {
    pub const DEFAULT: Timeout = Timeout(600);

    pub fn from_secs(secs: u64) -> Option<Timeout> {
        (secs > 0).then_some(Timeout(secs))
    }

    pub fn from_minutes(minutes: u64) -> Option<Timeout> {
        minutes.checked_mul(60).and_then(Timeout::from_secs)
    }

    pub fn secs(&self) -> u64 {
        self.0
    }
}

impl Default for Timeout {
    fn default() -> Self {
        Timeout::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UserKey {
    pub client_token: String,
    /// Empty when the line had no User-Agent.
    pub user_agent: String,
}

impl UserKey {
    pub fn of(request: &ArchiveRequest) -> UserKey {
        UserKey {
            client_token: request.entry.client_token.clone(),
            user_agent: request.entry.user_agent_str().into(),
        }
    }

    pub fn matches(&self, request: &ArchiveRequest) -> bool {
        self.client_token == request.entry.client_token && self.user_agent == request.entry.user_agent_str()
    }
}

/// Deterministic session id: the first 64 bits of
/// SHA-256(`client_token \0 user_agent \0 start`), in hex.
pub fn session_id(key: &UserKey, start: i64) -> String {
    let mut h = Sha256::new();
    h.update(key.client_token.as_bytes());
    h.update([0u8]);
    h.update(key.user_agent.as_bytes());
    h.update([0u8]);
    h.update(start.to_le_bytes());
    let digest = h.finalize();
    let mut out = String::with_capacity(16);
    for b in &digest[..8] {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Orders requests the way sessions are built: time, then input position.
pub fn time_order(a: &ArchiveRequest, b: &ArchiveRequest) -> core::cmp::Ordering {
    (a.entry.timestamp.epoch_seconds(), a.seq).cmp(&(b.entry.timestamp.epoch_seconds(), b.seq))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub key: UserKey,
    pub requests: Vec<ArchiveRequest>,
    /// Epoch seconds of the first and last request.
    pub start: i64,
    pub end: i64,
    pub html_count: u32,
    pub image_count: u32,
    pub timemap_count: u32,
}

impl Session {
    /// Builds a session from one user's requests. They are put in time order
    /// first. Returns `None` for an empty list.
    pub fn from_requests(key: UserKey, mut requests: Vec<ArchiveRequest>) -> Option<Session> {
        if requests.is_empty() {
            return None;
        }
        if !requests.is_sorted_by(|a, b| time_order(a, b).is_le()) {
            requests.sort_by(time_order);
        }
        let start = requests[0].entry.timestamp.epoch_seconds();
        let end = requests[requests.len() - 1].entry.timestamp.epoch_seconds();
        let mut s = Session {
            id: session_id(&key, start),
            key,
            requests,
            start,
            end,
            html_count: 0,
            image_count: 0,
            timemap_count: 0,
        };
        s.recount();
        Some(s)
    }

    fn recount(&mut self) {
        let (mut html, mut image, mut tm) = (0, 0, 0);
        for r in &self.requests {
            match r.resource_class {
                ResourceClass::Html => html += 1,
                ResourceClass::Image => image += 1,
                _ => {}
            }
            if r.kind == RequestKind::Timemap {
                tm += 1;
            }
        }
        self.html_count = html;
        self.image_count = image;
        self.timemap_count = tm;
    }

    pub fn duration_secs(&self) -> u64 {
        (self.end - self.start).unsigned_abs()
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }
}

/// Streaming splitter. Requests must arrive grouped by user and in
/// [`time_order`] within each user.
#[derive(Debug)]
pub struct Splitter {
    timeout: Timeout,
    key: Option<UserKey>,
    last: i64,
    current: Vec<ArchiveRequest>,
}

impl Splitter {
    pub fn new(timeout: Timeout) -> Self {
        Splitter { timeout, key: None, last: 0, current: Vec::new() }
    }

    /// Adds the next request; returns the session it closed, if any.
    pub fn push(&mut self, request: ArchiveRequest) -> Option<Session> {
        let ts = request.entry.timestamp.epoch_seconds();
        let same_user = self.key.as_ref().is_some_and(|k| k.matches(&request));
        let closed = if same_user && (ts - self.last) as i128 <= i128::from(self.timeout.secs()) {
            None
        } else {
            self.take()
        };
        if self.key.is_none() {
            self.key = Some(UserKey::of(&request));
        }
        self.last = ts;
        self.current.push(request);
        closed
    }

    fn take(&mut self) -> Option<Session> {
        let key = self.key.take()?;
        let reqs = core::mem::take(&mut self.current);
        Session::from_requests(key, reqs)
    }

    pub fn finish(&mut self) -> Option<Session> {
        self.take()
    }
}

/// In-memory sessionization. Input order does not matter; output is ordered
/// by user, then start time.
pub fn build_sessions<I>(requests: I, timeout: Timeout) -> Vec<Session>
where
    I: IntoIterator<Item = ArchiveRequest>,
{
    let mut by_user: BTreeMap<UserKey, Vec<ArchiveRequest>> = BTreeMap::new();
    for r in requests {
        by_user.entry(UserKey::of(&r)).or_default().push(r);
    }
    let mut out = Vec::new();
    for (_, mut reqs) in by_user {
        reqs.sort_by(time_order);
        split_sorted(reqs, timeout, &mut out);
    }
    out
}

/// Splits one user's time-ordered requests.
pub fn split_sorted(requests: Vec<ArchiveRequest>, timeout: Timeout, out: &mut Vec<Session>) {
    let mut splitter = Splitter::new(timeout);
    for r in requests {
        if let Some(s) = splitter.push(r) {
            out.push(s);
        }
    }
    out.extend(splitter.finish());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::{classify_path, ArchiveProfile};
    use crate::entry::{parse_line, FormatHint};
    use alloc::format;
    use alloc::vec;

    fn at(secs: i64, ip: &str, ua: &str, seq: u64) -> ArchiveRequest {
        let t = chrono::DateTime::from_timestamp(1_549_497_600 + secs, 0).unwrap();
        let ts = crate::time::LogTime::new(t.fixed_offset());
        let line = format!("{ip} - - [{ts}] \"GET /web/2019/http://a.org/ HTTP/1.1\" 200 1 \"-\" \"{ua}\"");
        classify_path(parse_line(&line, FormatHint::Auto).unwrap(), ArchiveProfile::Auto).with_seq(seq)
    }

    fn sizes(v: &[Session]) -> Vec<usize> {
        v.iter().map(Session::len).collect()
    }

    #[test]
    fn gap_longer_than_timeout_splits() {
        let s = build_sessions(vec![at(0, "a", "u", 0), at(300, "a", "u", 1), at(1200, "a", "u", 2)], Timeout::DEFAULT);
        assert_eq!(sizes(&s), vec![2, 1]);
        assert_eq!((s[0].start, s[0].end - s[0].start), (1_549_497_600, 300));
    }

    #[test]
    fn gap_of_exactly_timeout_does_not_split() {
        let s = build_sessions(vec![at(0, "a", "u", 0), at(600, "a", "u", 1)], Timeout::DEFAULT);
        assert_eq!(sizes(&s), vec![2]);
        let s = build_sessions(vec![at(0, "a", "u", 0), at(601, "a", "u", 1)], Timeout::DEFAULT);
        assert_eq!(sizes(&s), vec![1, 1]);
    }

    #[test]
    fn user_agent_separates_users() {
        let s = build_sessions(vec![at(0, "a", "u1", 0), at(1, "a", "u2", 1)], Timeout::DEFAULT);
        assert_eq!(s.len(), 2);
        assert_ne!(s[0].key, s[1].key);
    }

    #[test]
    fn arrival_order_is_irrelevant() {
        let reqs = vec![at(5, "a", "u", 0), at(0, "a", "u", 1), at(5, "a", "u", 2), at(2000, "a", "u", 3)];
        let mut rev = reqs.clone();
        rev.reverse();
        let a = build_sessions(reqs, Timeout::DEFAULT);
        let b = build_sessions(rev, Timeout::DEFAULT);
        assert_eq!(a, b);
        let seqs: Vec<u64> = a[0].requests.iter().map(|r| r.seq).collect();
        assert_eq!(seqs, vec![1, 0, 2]);
    }

    #[test]
    fn ids_are_stable_and_distinct() {
        let k = UserKey { client_token: "a".into(), user_agent: "u".into() };
        assert_eq!(session_id(&k, 10), session_id(&k, 10));
        assert_ne!(session_id(&k, 10), session_id(&k, 11));
        assert_eq!(session_id(&k, 10).len(), 16);
    }

    #[test]
    fn timeout_must_be_positive() {
        assert!(Timeout::from_secs(0).is_none());
        assert_eq!(Timeout::from_minutes(10), Some(Timeout::DEFAULT));
    }
}
