//! Robot detection.
//!
//! Six heuristics are evaluated per session and combined with OR:
//!
//! * known bot: the User-Agent contains a pattern from a [`KnownBotList`];
//! * HEAD: the session issued a HEAD request;
//! * UA/IP: the client token used more than `ua_per_ip` distinct User-Agents
//!   over the whole corpus;
//! * robots.txt: the session requested `/robots.txt`;
//! * browsing speed: at least `browsing_speed` HTML requests per second;
//! * image-to-HTML: fewer than `ih_ratio` images per HTML request.
//!
//! Browsing speed and image-to-HTML are evaluated on sessions that still
//! contain embedded resources, i.e. before stage-2 cleaning.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use aho_corasick::AhoCorasick;
use serde::{Deserialize, Serialize};

use crate::archive::{ArchiveRequest, RequestKind, ResourceClass};
use crate::entry::Method;
use crate::ratio::Decimal;
use crate::session::Session;

/// The shipped pattern list.
pub const DEFAULT_KNOWN_BOTS: &str = include_str!("../data/known_bots.txt");

/// Self-identification keywords. Always part of every list.
pub const BUILTIN_KEYWORDS: [&str; 3] = ["bot", "crawler", "spider"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmptyBotList;

impl fmt::Display for EmptyBotList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("known-bot list contains no patterns")
    }
}

impl core::error::Error for EmptyBotList {}

/// Case-insensitive substring patterns.
#[derive(Debug, Clone)]
pub struct KnownBotList {
    patterns: Vec<String>,
    matcher: AhoCorasick,
}

impl KnownBotList {
    pub fn new<I, S>(patterns: I) -> Result<Self, EmptyBotList>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        for p in patterns {
            let p = p.as_ref().trim().to_ascii_lowercase();
            if !p.is_empty() && seen.insert(p.clone()) {
                list.push(p);
            }
        }
        if list.is_empty() {
            return Err(EmptyBotList);
        }
        let matcher = AhoCorasick::builder()
            .ascii_case_insensitive(true)
            .build(&list)
            .map_err(|_| EmptyBotList)?;
        Ok(KnownBotList { patterns: list, matcher })
    }

    /// Parses a pattern file. The built-in keywords are always added.
    pub fn parse(text: &str) -> Result<Self, EmptyBotList> {
        let from_file: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        if from_file.is_empty() {
            return Err(EmptyBotList);
        }
        KnownBotList::new(BUILTIN_KEYWORDS.iter().copied().chain(from_file))
    }

    /// Only `bot`, `crawler`, `spider`: the self-identification test.
    pub fn builtin() -> Self {
        KnownBotList::new(BUILTIN_KEYWORDS).unwrap_or_else(|_| unreachable!())
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn matches(&self, user_agent: &str) -> bool {
        self.matcher.is_match(user_agent)
    }
}

impl Default for KnownBotList {
    fn default() -> Self {
        KnownBotList::parse(DEFAULT_KNOWN_BOTS).unwrap_or_else(|_| KnownBotList::builtin())
    }
}

pub fn flag_known_bot(user_agent: &str, list: &KnownBotList) -> bool {
    list.matches(user_agent)
}

pub fn flag_head(request: &ArchiveRequest) -> bool {
    request.entry.method == Method::Head
}

/// Counts distinct User-Agents per client token, remembering at most
/// `threshold + 1` of them per token.
#[derive(Debug, Clone, Default)]
pub struct UaPerIpCounter {
    threshold: u32,
    seen: BTreeMap<String, BTreeSet<String>>,
}

impl UaPerIpCounter {
    pub fn new(threshold: u32) -> Self {
        UaPerIpCounter { threshold, seen: BTreeMap::new() }
    }

    pub fn observe(&mut self, client_token: &str, user_agent: &str) {
        let cap = self.threshold as usize + 1;
        match self.seen.get_mut(client_token) {
            Some(set) => {
                if set.len() < cap && !set.contains(user_agent) {
                    set.insert(user_agent.to_string());
                }
            }
            None => {
                let mut set = BTreeSet::new();
                set.insert(user_agent.to_string());
                self.seen.insert(client_token.to_string(), set);
            }
        }
    }

    pub fn observe_request(&mut self, request: &ArchiveRequest) {
        self.observe(&request.entry.client_token, request.entry.user_agent_str());
    }

    /// Tokens with strictly more than `threshold` distinct User-Agents.
    pub fn flagged(&self) -> BTreeSet<String> {
        self.seen
            .iter()
            .filter(|(_, uas)| uas.len() > self.threshold as usize)
            .map(|(t, _)| t.clone())
            .collect()
    }
}

/// Client tokens whose distinct User-Agent count exceeds `threshold`.
pub fn flag_ua_per_ip<'a, I>(corpus: I, threshold: u32) -> BTreeSet<String>
where
    I: IntoIterator<Item = &'a ArchiveRequest>,
{
    let mut c = UaPerIpCounter::new(threshold);
    for r in corpus {
        c.observe_request(r);
    }
    c.flagged()
}

pub fn flag_robots_txt(session: &Session) -> bool {
    session.requests.iter().any(|r| r.kind == RequestKind::RobotsTxt)
}

/// HTML requests per second over a session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BrowsingSpeed {
    /// Zero duration with at most one HTML request.
    Undefined,
    /// Zero duration with two or more HTML requests.
    Infinite,
    Rate { html: u64, secs: u64 },
}

impl BrowsingSpeed {
    pub fn per_second(&self) -> Option<f64> {
        match self {
            BrowsingSpeed::Undefined => None,
            BrowsingSpeed::Infinite => Some(f64::INFINITY),
            BrowsingSpeed::Rate { html, secs } => Some(*html as f64 / *secs as f64),
        }
    }

    pub fn at_least(&self, threshold: Decimal) -> bool {
        match *self {
            BrowsingSpeed::Undefined => false,
            BrowsingSpeed::Infinite => true,
            BrowsingSpeed::Rate { html, secs } => threshold.le_ratio(html, secs),
        }
    }
}

pub fn session_browsing_speed(session: &Session) -> BrowsingSpeed {
    browsing_speed(u64::from(session.html_count), session.duration_secs())
}

/// Browsing speed of `html` HTML requests over `secs` seconds.
pub fn browsing_speed(html: u64, secs: u64) -> BrowsingSpeed {
    match secs {
        0 if html >= 2 => BrowsingSpeed::Infinite,
        0 => BrowsingSpeed::Undefined,
        secs => BrowsingSpeed::Rate { html, secs },
    }
}

/// Images per HTML request; `None` when the session has no HTML request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IhRatio {
    pub images: u64,
    pub html: u64,
}

impl IhRatio {
    pub fn value(&self) -> f64 {
        self.images as f64 / self.html as f64
    }

    pub fn below(&self, threshold: Decimal) -> bool {
        threshold.gt_ratio(self.images, self.html)
    }
}

pub fn session_ih_ratio(session: &Session) -> Option<IhRatio> {
    (session.html_count > 0).then(|| IhRatio {
        images: u64::from(session.image_count),
        html: u64::from(session.html_count),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    /// HTML requests per second at or above which a session is a robot.
    pub browsing_speed: Decimal,
    /// Images per HTML request below which a session is a robot.
    pub ih_ratio: Decimal,
    /// Distinct User-Agents per client token above which it is a robot.
    pub ua_per_ip: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            browsing_speed: Decimal::from_parts(1, 2),
            ih_ratio: Decimal::from_parts(1, 10),
            ua_per_ip: 20,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !self.browsing_speed.is_positive() {
            return Err("browsing-speed threshold must be positive");
        }
        if !self.ih_ratio.is_positive() {
            return Err("image-to-HTML threshold must be positive");
        }
        if self.ua_per_ip == 0 {
            return Err("UA-per-IP threshold must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    KnownBot,
    HeadMethod,
    UaPerIp,
    RobotsTxt,
    BrowsingSpeed,
    IhRatio,
}

impl Heuristic {
    pub const ALL: [Heuristic; 6] = [
        Heuristic::KnownBot,
        Heuristic::HeadMethod,
        Heuristic::UaPerIp,
        Heuristic::RobotsTxt,
        Heuristic::BrowsingSpeed,
        Heuristic::IhRatio,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Heuristic::KnownBot => "Known Bots",
            Heuristic::HeadMethod => "HEAD Requests",
            Heuristic::UaPerIp => "#UA per IP",
            Heuristic::RobotsTxt => "robots.txt",
            Heuristic::BrowsingSpeed => "Browsing Speed",
            Heuristic::IhRatio => "IH Ratio",
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            Heuristic::KnownBot => "known_bot",
            Heuristic::HeadMethod => "head_method",
            Heuristic::UaPerIp => "ua_per_ip",
            Heuristic::RobotsTxt => "robots_txt",
            Heuristic::BrowsingSpeed => "browsing_speed",
            Heuristic::IhRatio => "ih_ratio",
        }
    }
}

/// Requests that individually triggered a request-level heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TriggerCounts {
    pub known_bot: u32,
    pub head_method: u32,
    pub ua_per_ip: u32,
    pub robots_txt: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BotVerdict {
    pub known_bot: bool,
    pub head_method: bool,
    pub ua_per_ip: bool,
    pub robots_txt: bool,
    pub browsing_speed: bool,
    pub ih_ratio: bool,
    pub is_robot: bool,
    pub counts: TriggerCounts,
}

impl BotVerdict {
    pub fn flag(&self, h: Heuristic) -> bool {
        match h {
            Heuristic::KnownBot => self.known_bot,
            Heuristic::HeadMethod => self.head_method,
            Heuristic::UaPerIp => self.ua_per_ip,
            Heuristic::RobotsTxt => self.robots_txt,
            Heuristic::BrowsingSpeed => self.browsing_speed,
            Heuristic::IhRatio => self.ih_ratio,
        }
    }

    pub fn flags(&self) -> BTreeSet<Heuristic> {
        Heuristic::ALL.into_iter().filter(|h| self.flag(*h)).collect()
    }
}

/// What the heuristics need to know about a session, accumulated one
/// request at a time.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionSummary {
    pub client_token: String,
    pub user_agent: String,
    pub requests: u32,
    pub html: u32,
    pub images: u32,
    pub head_requests: u32,
    pub robots_requests: u32,
    pub start: i64,
    pub end: i64,
}

impl SessionSummary {
    pub fn of(session: &Session) -> Self {
        let mut s = SessionSummary::default();
        for r in &session.requests {
            s.observe(r);
        }
        s
    }

    /// Adds the next request of the session, in time order.
    pub fn observe(&mut self, r: &ArchiveRequest) {
        let ts = r.entry.timestamp.epoch_seconds();
        if self.requests == 0 {
            self.client_token.clone_from(&r.entry.client_token);
            self.user_agent = r.entry.user_agent_str().to_string();
            self.start = ts;
        }
        self.end = ts;
        self.requests += 1;
        match r.resource_class {
            ResourceClass::Html => self.html += 1,
            ResourceClass::Image => self.images += 1,
            _ => {}
        }
        if flag_head(r) {
            self.head_requests += 1;
        }
        if r.kind == RequestKind::RobotsTxt {
            self.robots_requests += 1;
        }
    }

    pub fn duration_secs(&self) -> u64 {
        (self.end - self.start).unsigned_abs()
    }
}

/// Evaluates all six heuristics on a pre-stage-2 session.
pub fn classify_session(
    session: &Session,
    ua_flagged: &BTreeSet<String>,
    list: &KnownBotList,
    thresholds: &Thresholds,
) -> BotVerdict {
    classify_summary(&SessionSummary::of(session), ua_flagged.contains(&session.key.client_token), list, thresholds)
}

/// Like [`classify_session`], from a summary. `ua_flagged` tells whether the
/// session's client token exceeded the UA-per-IP threshold.
pub fn classify_summary(
    s: &SessionSummary,
    ua_flagged: bool,
    list: &KnownBotList,
    thresholds: &Thresholds,
) -> BotVerdict {
    let mut counts = TriggerCounts { head_method: s.head_requests, robots_txt: s.robots_requests, ..Default::default() };
    if list.matches(&s.user_agent) {
        counts.known_bot = s.requests;
    }
    if ua_flagged {
        counts.ua_per_ip = s.requests;
    }
    let browsing_speed = browsing_speed(u64::from(s.html), s.duration_secs()).at_least(thresholds.browsing_speed);
    let ih_ratio = s.html > 0 && thresholds.ih_ratio.gt_ratio(u64::from(s.images), u64::from(s.html));
    let mut v = BotVerdict {
        known_bot: counts.known_bot > 0,
        head_method: counts.head_method > 0,
        ua_per_ip: counts.ua_per_ip > 0,
        robots_txt: counts.robots_txt > 0,
        browsing_speed,
        ih_ratio,
        is_robot: false,
        counts,
    };
    v.is_robot = Heuristic::ALL.iter().any(|h| v.flag(*h));
    v
}

/// The two halves of a corpus after robot detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subdataset {
    Human,
    Robot,
}

impl Subdataset {
    pub const ALL: [Subdataset; 2] = [Subdataset::Human, Subdataset::Robot];

    pub fn of(is_robot: bool) -> Self {
        if is_robot {
            Subdataset::Robot
        } else {
            Subdataset::Human
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Subdataset::Human => "human",
            Subdataset::Robot => "robot",
        }
    }
}

impl BotVerdict {
    pub fn subdataset(&self) -> Subdataset {
        Subdataset::of(self.is_robot)
    }
}

/// Sessions and requests flagged per heuristic, plus totals.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BotTally {
    pub total_sessions: u64,
    pub total_requests: u64,
    pub robot_sessions: u64,
    pub robot_requests: u64,
    /// Indexed like [`Heuristic::ALL`]: (sessions, requests in those sessions).
    pub per_heuristic: [(u64, u64); 6],
}

impl BotTally {
    pub fn observe(&mut self, session_len: usize, verdict: &BotVerdict) {
        let n = session_len as u64;
        self.total_sessions += 1;
        self.total_requests += n;
        if verdict.is_robot {
            self.robot_sessions += 1;
            self.robot_requests += n;
        }
        for (i, h) in Heuristic::ALL.iter().enumerate() {
            if verdict.flag(*h) {
                self.per_heuristic[i].0 += 1;
                self.per_heuristic[i].1 += n;
            }
        }
    }

    pub fn merge(&mut self, other: &BotTally) {
        self.total_sessions += other.total_sessions;
        self.total_requests += other.total_requests;
        self.robot_sessions += other.robot_sessions;
        self.robot_requests += other.robot_requests;
        for (a, b) in self.per_heuristic.iter_mut().zip(other.per_heuristic.iter()) {
            a.0 += b.0;
            a.1 += b.1;
        }
    }

    pub fn heuristic(&self, h: Heuristic) -> (u64, u64) {
        self.per_heuristic[Heuristic::ALL.iter().position(|x| *x == h).unwrap_or(0)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::{classify_path, ArchiveProfile};
    use crate::entry::{parse_line, FormatHint};
    use crate::session::{build_sessions, Timeout};
    use alloc::format;
    use alloc::vec;

    const FIREFOX: &str = "Mozilla/5.0 (X11; Ubuntu; Linux x86_64; rv:48.0) Gecko/20100101 Firefox/48.0";

    fn req(secs: i64, ip: &str, ua: &str, method: &str, path: &str, seq: u64) -> ArchiveRequest {
        let t = chrono::DateTime::from_timestamp(1_549_497_600 + secs, 0).unwrap();
        let ts = crate::time::LogTime::new(t.fixed_offset());
        let line = format!("{ip} - - [{ts}] \"{method} {path} HTTP/1.1\" 200 1 \"-\" \"{ua}\"");
        classify_path(parse_line(&line, FormatHint::Auto).unwrap(), ArchiveProfile::Auto).with_seq(seq)
    }

    fn html(secs: i64, n: u64) -> ArchiveRequest {
        req(secs, "9.9.9.9", FIREFOX, "GET", &format!("/web/2019/http://a.org/p{n}.html"), n)
    }

    fn image(secs: i64, n: u64) -> ArchiveRequest {
        req(secs, "9.9.9.9", FIREFOX, "GET", &format!("/web/2019im_/http://a.org/i{n}.png"), n)
    }

    fn one_session(reqs: Vec<ArchiveRequest>) -> Session {
        let mut s = build_sessions(reqs, Timeout::DEFAULT);
        assert_eq!(s.len(), 1);
        s.remove(0)
    }

    #[test]
    fn known_bot_matching() {
        let list = KnownBotList::default();
        assert!(flag_known_bot("Twitterbot/1.0", &list));
        assert!(flag_known_bot("MySuperCRAWLER/2.0", &list));
        assert!(!flag_known_bot(FIREFOX, &list));
        assert!(!flag_known_bot("RSS Scout 0.9.2", &list));
        let builtin = KnownBotList::builtin();
        assert!(builtin.matches("Googlebot"));
        assert!(!builtin.matches("curl/7.1"));
    }

    #[test]
    fn list_file_parsing() {
        let l = KnownBotList::parse("# comment\n\n  Heritrix \n").unwrap();
        assert!(l.matches("Mozilla/5.0 (compatible; heritrix/3.1)"));
        assert!(l.matches("spider-man"));
        assert!(KnownBotList::parse("# nothing\n\n").is_err());
    }

    #[test]
    fn head_flag() {
        assert!(flag_head(&req(0, "a", "u", "HEAD", "/wayback/20170625001353/http://www.fabricadochocolate.com", 0)));
        assert!(!flag_head(&req(0, "a", "u", "GET", "/wayback/20170625001353/http://www.fabricadochocolate.com", 0)));
        assert!(!flag_head(&req(0, "a", "u", "POST", "/web/20070211155651/http://212.227.83.57/cproc.aspx", 0)));
    }

    fn ua_corpus(distinct: usize) -> Vec<ArchiveRequest> {
        (0..distinct).map(|i| req(i as i64, "7.7.7.7", &format!("UA-{i}"), "GET", "/web/2019/http://a.org/", i as u64)).collect()
    }

    #[test]
    fn ua_per_ip_boundary() {
        assert!(flag_ua_per_ip(&ua_corpus(21), 20).contains("7.7.7.7"));
        assert!(flag_ua_per_ip(&ua_corpus(20), 20).is_empty());
        let same: Vec<_> = (0..10_000).map(|i| req(i, "8.8.8.8", "UA", "GET", "/web/2019/http://a.org/", i as u64)).collect();
        assert!(flag_ua_per_ip(&same, 20).is_empty());
    }

    #[test]
    fn robots_flag() {
        let s = one_session(vec![html(0, 0), req(1, "9.9.9.9", FIREFOX, "GET", "http://web.archive.org/robots.txt", 1)]);
        assert!(flag_robots_txt(&s));
        let s = one_session(vec![html(0, 0), req(1, "9.9.9.9", FIREFOX, "GET", "/robots.txt?ref=x", 1)]);
        assert!(flag_robots_txt(&s));
        assert!(!flag_robots_txt(&one_session(vec![html(0, 0), html(5, 1)])));
    }

    #[test]
    fn browsing_speed_values() {
        let t = Thresholds::default();
        let s = one_session((0..10).map(|i| html(i * 40 / 9, i as u64)).collect());
        assert_eq!(s.duration_secs(), 40);
        assert_eq!(session_browsing_speed(&s).per_second(), Some(0.25));
        assert!(!session_browsing_speed(&s).at_least(t.browsing_speed));
        let s = one_session((0..10).map(|i| html(i * 10 / 9, i as u64)).collect());
        assert_eq!(s.duration_secs(), 10);
        assert!(session_browsing_speed(&s).at_least(t.browsing_speed));
        let s = one_session(vec![html(0, 0), html(0, 1)]);
        assert_eq!(session_browsing_speed(&s), BrowsingSpeed::Infinite);
        let s = one_session(vec![html(0, 0), image(0, 1)]);
        assert_eq!(session_browsing_speed(&s), BrowsingSpeed::Undefined);
    }

    #[test]
    fn ih_ratio_values() {
        let t = Thresholds::default();
        let mk = |images: u64, pages: u64| {
            let mut v: Vec<_> = (0..pages).map(|i| html(i as i64 * 10, i)).collect();
            v.extend((0..images).map(|i| image(i as i64 * 10 + 5, 100 + i)));
            one_session(v)
        };
        assert!(session_ih_ratio(&mk(0, 20)).unwrap().below(t.ih_ratio));
        assert!(!session_ih_ratio(&mk(1, 10)).unwrap().below(t.ih_ratio));
        assert!(session_ih_ratio(&mk(1, 11)).unwrap().below(t.ih_ratio));
        assert!(!session_ih_ratio(&mk(3, 10)).unwrap().below(t.ih_ratio));
        assert_eq!(session_ih_ratio(&mk(2, 0)), None);
    }

    #[test]
    fn verdicts() {
        let list = KnownBotList::default();
        let t = Thresholds::default();
        let none = BTreeSet::new();
        let tw = "Twitterbot/1.0";
        let s = one_session(vec![
            req(0, "199.16.157.100_0_0", tw, "HEAD", "/wayback/20170625001353/http://www.fabricadochocolate.com", 0),
            req(3, "199.16.157.100_0_0", tw, "HEAD", "/wayback/20170625001353/http://www.fabricadochocolate.com/", 1),
        ]);
        let v = classify_session(&s, &none, &list, &t);
        assert!(v.known_bot && v.head_method && v.is_robot);
        assert_eq!(v.counts.head_method, 2);

        let s = one_session(vec![html(0, 0), image(5, 1)]);
        let v = classify_session(&s, &none, &list, &t);
        assert_eq!(v, BotVerdict::default());

        let s = one_session((0..30).map(|i| html(i, i as u64)).collect());
        let v = classify_session(&s, &none, &list, &t);
        assert!(v.ih_ratio && v.browsing_speed && v.is_robot);
        assert!(!v.known_bot && !v.head_method && !v.ua_per_ip && !v.robots_txt);

        let mut flagged = BTreeSet::new();
        flagged.insert("9.9.9.9".to_string());
        let s = one_session(vec![html(0, 0), image(5, 1)]);
        let v = classify_session(&s, &flagged, &list, &t);
        assert!(v.ua_per_ip && v.is_robot);
        assert_eq!(v.counts.ua_per_ip, 2);
    }

    #[test]
    fn tally_overlaps() {
        let mut t = BotTally::default();
        let both = BotVerdict { known_bot: true, ih_ratio: true, is_robot: true, ..Default::default() };
        t.observe(3, &both);
        t.observe(2, &BotVerdict::default());
        assert_eq!((t.total_sessions, t.total_requests, t.robot_sessions, t.robot_requests), (2, 5, 1, 3));
        assert_eq!(t.heuristic(Heuristic::KnownBot), (1, 3));
        assert_eq!(t.heuristic(Heuristic::IhRatio), (1, 3));
        let sum: u64 = t.per_heuristic.iter().map(|p| p.0).sum();
        assert!(t.robot_sessions <= sum);
    }
}
