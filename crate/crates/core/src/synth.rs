//! Synthetic access logs with planted answers.
//!
//! A [`SynthSpec`] lists session blueprints: how many sessions to emit, whether
//! they belong to a human or a robot, which robot heuristics they must
//! trigger, which access pattern their cleaned requests must form, and how the
//! captures they request are spread over past years. Every session is built so
//! that exactly the requested heuristics fire and exactly the requested
//! pattern is recovered after cleaning:
//!
//! * requests that survive stage-2 cleaning are GETs of mementos or TimeMaps
//!   answered with 200, 404 or 503;
//! * padding that stage 2 removes (images, scripts, redirects, HEAD,
//!   robots.txt) carries the request-level triggers and keeps the image ratio
//!   where it has to be;
//! * human pacing leaves more than two seconds per HTML request;
//! * captures of distinct URI-Rs are either within three hours of each other
//!   (a dive) or at least four days apart.
//!
//! Output is a pure function of the spec, seed included.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use chrono::{Datelike, FixedOffset, NaiveDate, TimeZone};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::ArchiveProfile;
use crate::bot::{Heuristic, Subdataset};
use crate::pattern::Pattern;
use crate::session::{session_id, UserKey};
use crate::temporal::{TemporalHistogram, YearsPrior};
use crate::time::LogTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserKind {
    Human,
    Robot,
}

impl UserKind {
    pub fn subdataset(self) -> Subdataset {
        Subdataset::of(self == UserKind::Robot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearWeight {
    pub years_prior: u32,
    pub weight: u32,
}

fn default_years() -> Vec<YearWeight> {
    alloc::vec![YearWeight { years_prior: 0, weight: 1 }]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blueprint {
    pub count: u32,
    pub user_kind: UserKind,
    #[serde(default)]
    pub triggers: BTreeSet<Heuristic>,
    pub pattern: Pattern,
    /// Requests left after stage-2 cleaning. Defaults to the pattern's
    /// minimum plus up to two.
    #[serde(default)]
    pub requests: Option<u32>,
    /// Relative weights of capture years, counted back from the log year.
    #[serde(default = "default_years")]
    pub years: Vec<YearWeight>,
}

fn default_profile() -> ArchiveProfile {
    ArchiveProfile::IaWayback
}

fn default_group() -> u32 {
    21
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub log_date: NaiveDate,
    #[serde(default = "default_profile")]
    pub profile: ArchiveProfile,
    /// Write the vhost / content-type layout instead of Combined.
    #[serde(default)]
    pub extended: bool,
    /// Requests outside archive content (home page, static files).
    #[serde(default)]
    pub noise_lines: u64,
    /// Lines that do not parse.
    #[serde(default)]
    pub malformed_lines: u64,
    /// Sessions sharing one client token in UA-per-IP blueprints, each with
    /// its own User-Agent. Must exceed the detector's threshold.
    #[serde(default = "default_group")]
    pub ua_group_size: u32,
    #[serde(default, rename = "blueprint")]
    pub blueprints: Vec<Blueprint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthError {
    RobotWithoutTrigger(usize),
    HumanWithTrigger(usize),
    TooFewRequests { blueprint: usize, pattern: Pattern, min: u32 },
    DipSize(usize),
    NoYears(usize),
    YearOutOfRange(usize),
    GroupTooSmall,
    OutOfSlots(usize),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::RobotWithoutTrigger(i) => write!(f, "blueprint {i}: a robot needs at least one trigger"),
            SynthError::HumanWithTrigger(i) => write!(f, "blueprint {i}: a human cannot trigger robot heuristics"),
            SynthError::TooFewRequests { blueprint, pattern, min } => {
                write!(f, "blueprint {blueprint}: {pattern} needs at least {min} requests")
            }
            SynthError::DipSize(i) => write!(f, "blueprint {i}: a Dip has exactly one request"),
            SynthError::NoYears(i) => write!(f, "blueprint {i}: year weights are empty or all zero"),
            SynthError::YearOutOfRange(i) => write!(f, "blueprint {i}: capture year before 1 CE"),
            SynthError::GroupTooSmall => f.write_str("ua_group_size must be at least 2"),
            SynthError::OutOfSlots(i) => write!(f, "blueprint {i}: not enough distinct capture days"),
        }
    }
}

impl core::error::Error for SynthError {}

/// Fewest surviving requests that can form a pattern.
pub fn min_requests(p: Pattern) -> u32 {
    match p {
        Pattern::Dip => 1,
        Pattern::Slide | Pattern::Dive | Pattern::Skim | Pattern::Unknown => 2,
        Pattern::DiveSlide => 3,
        Pattern::DiveSkim | Pattern::SkimSlide => 4,
        Pattern::DiveSlideSkim => 5,
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.ua_group_size < 2 {
            return Err(SynthError::GroupTooSmall);
        }
        for (i, b) in self.blueprints.iter().enumerate() {
            match b.user_kind {
                UserKind::Robot if b.triggers.is_empty() => return Err(SynthError::RobotWithoutTrigger(i)),
                UserKind::Human if !b.triggers.is_empty() => return Err(SynthError::HumanWithTrigger(i)),
                _ => {}
            }
            if let Some(n) = b.requests {
                if b.pattern == Pattern::Dip && n != 1 {
                    return Err(SynthError::DipSize(i));
                }
                let min = min_requests(b.pattern);
                if n < min {
                    return Err(SynthError::TooFewRequests { blueprint: i, pattern: b.pattern, min });
                }
            }
            if b.years.iter().all(|y| y.weight == 0) {
                return Err(SynthError::NoYears(i));
            }
            if b.years.iter().any(|y| y.years_prior as i64 >= i64::from(self.log_date.year())) {
                return Err(SynthError::YearOutOfRange(i));
            }
        }
        Ok(())
    }

    pub fn is_arquivo(&self) -> bool {
        self.profile == ArchiveProfile::Arquivo
    }
}

/// The planted answer for one session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthSession {
    pub session_id: String,
    pub client_token: String,
    pub user_agent: String,
    pub user_kind: UserKind,
    pub triggers: BTreeSet<Heuristic>,
    pub pattern: Pattern,
    /// All lines of the session, padding included.
    pub requests: u32,
    /// Lines left after stage-2 cleaning.
    pub survivors: u32,
    /// Years prior (calendar) of every surviving memento request.
    pub memento_years_prior: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    /// Log lines in timestamp order, without newlines.
    pub lines: Vec<String>,
    pub truth: Vec<TruthSession>,
    pub noise_lines: u64,
    pub malformed_lines: u64,
}

impl Corpus {
    pub fn expected_histogram(&self, subdataset: Subdataset) -> TemporalHistogram {
        let mut h = TemporalHistogram::default();
        for t in self.truth.iter().filter(|t| t.user_kind.subdataset() == subdataset) {
            for y in &t.memento_years_prior {
                h.add(YearsPrior::Years(*y));
            }
        }
        h
    }

    pub fn survivor_count(&self) -> u64 {
        self.truth.iter().map(|t| u64::from(t.survivors)).sum()
    }
}

const BOT_UAS: [&str; 8] = [
    "Twitterbot/1.0",
    "Mozilla/5.0 (compatible; Googlebot/2.1; +http://www.google.com/bot.html)",
    "Mozilla/5.0 (compatible; bingbot/2.0; +http://www.bing.com/bingbot.htm)",
    "python-requests/2.21.0",
    "Wget/1.19.4 (linux-gnu)",
    "curl/7.58.0",
    "Mozilla/5.0 (compatible; heritrix/3.3.0 +http://archive.org)",
    "facebookexternalhit/1.1 (+http://www.facebook.com/externalhit_uatext.php)",
];

const DOMAINS: [&str; 10] = [
    "www.cs.odu.edu",
    "maestro.haarp.alaska.edu",
    "www.fabricadochocolate.com",
    "www.goloco.org",
    "news.example.org",
    "www.publico.pt",
    "library.example.edu",
    "www.example.com",
    "blog.example.net",
    "www.sapo.pt",
];

const SECTIONS: [&str; 6] = ["news", "about", "people", "research", "archive", "events"];

fn browser_ua(rng: &mut ChaCha8Rng, variant: Option<u32>) -> String {
    if let Some(i) = variant {
        return format!(
            "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/72.0.3626.{i} Safari/537.36"
        );
    }
    match rng.gen_range(0..4) {
        0 => {
            let v = rng.gen_range(48..66);
            format!("Mozilla/5.0 (X11; Ubuntu; Linux x86_64; rv:{v}.0) Gecko/20100101 Firefox/{v}.0")
        }
        1 => format!(
            "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/{}.0.{}.{} Safari/537.36",
            rng.gen_range(60..73),
            rng.gen_range(3000..3700),
            rng.gen_range(0..200)
        ),
        2 => "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_14_3) AppleWebKit/605.1.15 (KHTML, like Gecko) Version/12.0.3 Safari/605.1.15".to_string(),
        _ => "Mozilla/5.0 (iPhone; CPU iPhone OS 12_1 like Mac OS X) AppleWebKit/605.1.15 (KHTML, like Gecko) Version/12.0 Mobile/15E148 Safari/604.1".to_string(),
    }
}

/// A surviving access in abstract form: URI and capture-slot indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Acc {
    /// URI index, slot index, seconds after the slot's base time.
    Mem(usize, usize, i64),
    Tm(usize),
}

fn offset(rng: &mut ChaCha8Rng) -> i64 {
    rng.gen_range(0..=3 * 3600)
}

/// Lays out the surviving accesses of a session.
fn plan(pattern: Pattern, size: u32, rng: &mut ChaCha8Rng) -> Vec<Acc> {
    use Acc::{Mem, Tm};
    let mut v: Vec<Acc> = match pattern {
        Pattern::Dip => {
            return if rng.gen_bool(0.7) { alloc::vec![Mem(0, 0, offset(rng))] } else { alloc::vec![Tm(0)] };
        }
        Pattern::Unknown => match rng.gen_range(0..3) {
            0 => alloc::vec![Mem(0, 0, offset(rng)), Mem(1, 1, offset(rng))],
            1 => alloc::vec![Tm(0), Tm(0)],
            _ => alloc::vec![Tm(0), Mem(1, 0, offset(rng))],
        },
        Pattern::Slide => alloc::vec![Mem(0, 0, offset(rng)), Mem(0, 1, offset(rng))],
        Pattern::Dive => alloc::vec![Mem(0, 0, offset(rng)), Mem(1, 0, offset(rng))],
        Pattern::Skim => alloc::vec![Tm(0), Tm(1)],
        Pattern::DiveSlide => alloc::vec![Mem(0, 0, offset(rng)), Mem(1, 0, offset(rng)), Mem(0, 1, offset(rng))],
        Pattern::DiveSkim => alloc::vec![Mem(0, 0, offset(rng)), Mem(1, 0, offset(rng)), Tm(2), Tm(3)],
        Pattern::SkimSlide => alloc::vec![Mem(0, 0, offset(rng)), Mem(0, 1, offset(rng)), Tm(1), Tm(2)],
        Pattern::DiveSlideSkim => {
            alloc::vec![Mem(0, 0, offset(rng)), Mem(1, 0, offset(rng)), Mem(0, 1, offset(rng)), Tm(2), Tm(3)]
        }
    };
    while (v.len() as u32) < size {
        let next_uri = v.iter().map(|a| match a { Mem(u, _, _) | Tm(u) => *u }).max().unwrap_or(0) + 1;
        let next_slot = v.iter().filter_map(|a| match a { Mem(_, s, _) => Some(*s), Tm(_) => None }).max().map_or(0, |s| s + 1);
        let grow = rng.gen_bool(0.5);
        let a = match pattern {
            // a new URI-R on a capture day of its own
            Pattern::Unknown if grow && v.iter().any(|a| matches!(a, Mem(..))) => Mem(next_uri, next_slot, offset(rng)),
            // the same URI-R on another day
            Pattern::Slide if grow => Mem(0, next_slot, offset(rng)),
            // another URI-R on the same day
            Pattern::Dive if grow => Mem(next_uri, 0, offset(rng)),
            // another TimeMap
            Pattern::Skim if grow => Tm(next_uri),
            // a reload changes no flag
            _ => v[rng.gen_range(0..v.len())],
        };
        v.push(a);
    }
    v
}

struct Slot {
    year: i32,
    years_prior: u32,
    /// Local seconds since the epoch of the slot's base time.
    base: i64,
}

fn allocate_slots(
    count: usize,
    years: &[YearWeight],
    log_year: i32,
    rng: &mut ChaCha8Rng,
    blueprint: usize,
) -> Result<Vec<Slot>, SynthError> {
    const ANCHORS: u32 = 72;
    let weights: Vec<u32> = years.iter().map(|y| y.weight).collect();
    let dist = WeightedIndex::new(&weights).map_err(|_| SynthError::NoYears(blueprint))?;
    let mut used: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut yi = dist.sample(rng);
        let free = |yp: u32, used: &BTreeSet<(u32, u32)>| used.range((yp, 0)..(yp, ANCHORS)).count() < ANCHORS as usize;
        if !free(years[yi].years_prior, &used) {
            yi = years
                .iter()
                .position(|y| y.weight > 0 && free(y.years_prior, &used))
                .ok_or(SynthError::OutOfSlots(blueprint))?;
        }
        let yp = years[yi].years_prior;
        let mut k = rng.gen_range(0..ANCHORS);
        while used.contains(&(yp, k)) {
            k = (k + 1) % ANCHORS;
        }
        used.insert((yp, k));
        let year = log_year - yp as i32;
        let day = NaiveDate::from_yo_opt(year, 3 + 5 * k).ok_or(SynthError::YearOutOfRange(blueprint))?;
        let hour = rng.gen_range(0..=20);
        let base = day.and_hms_opt(hour, rng.gen_range(0..60), rng.gen_range(0..60)).map_or(0, |t| t.and_utc().timestamp());
        out.push(Slot { year, years_prior: yp, base });
    }
    Ok(out)
}

fn stamp_of(epoch: i64) -> String {
    chrono::DateTime::from_timestamp(epoch, 0).map_or_else(String::new, |d| d.format("%Y%m%d%H%M%S").to_string())
}

/// One line before it gets its timestamp.
struct Pending {
    method: &'static str,
    path: String,
    status: u16,
    bytes: Option<u32>,
    referrer: Option<String>,
    content_type: &'static str,
    html: bool,
}

struct Gen<'s> {
    spec: &'s SynthSpec,
    rng: ChaCha8Rng,
    next_ip: u64,
    order: u64,
    offset: FixedOffset,
    events: Vec<(i64, u64, String)>,
    truth: Vec<TruthSession>,
}

impl Gen<'_> {
    fn prefix(&mut self) -> String {
        if self.spec.is_arquivo() {
            if self.rng.gen_bool(0.1) { "http://arquivo.pt/wayback/".into() } else { "/wayback/".into() }
        } else if self.rng.gen_bool(0.1) {
            "http://web.archive.org/web/".into()
        } else {
            "/web/".into()
        }
    }

    fn replay_url(&self, stamp: &str, uri: &str) -> String {
        if self.spec.is_arquivo() {
            format!("https://arquivo.pt/wayback/{stamp}/{uri}")
        } else {
            format!("https://web.archive.org/web/{stamp}/{uri}")
        }
    }

    fn new_ip(&mut self) -> String {
        let c = self.next_ip;
        self.next_ip += 1;
        let base = format!("{}.{}.{}.{}", 20 + (c >> 16), (c >> 8) & 255, c & 255, 7 + (c % 200));
        if self.spec.is_arquivo() {
            format!("{base}_0_0")
        } else {
            base
        }
    }

    fn local_epoch(&self, secs_into_day: i64) -> i64 {
        let midnight = self.spec.log_date.and_hms_opt(0, 0, 0).map_or(0, |t| t.and_utc().timestamp());
        midnight + secs_into_day - i64::from(self.offset.local_minus_utc())
    }

    fn line(&self, ip: &str, epoch: i64, p: &Pending, ua: &str) -> String {
        let dt = self
            .offset
            .timestamp_opt(epoch, 0)
            .single()
            .unwrap_or_else(|| self.offset.timestamp_opt(0, 0).unwrap());
        let ts = LogTime::new(dt);
        let bytes = p.bytes.map_or_else(|| "-".to_string(), |b| b.to_string());
        let referrer = p.referrer.as_deref().unwrap_or("-");
        if self.spec.extended {
            format!(
                "{ip} web.archive.org - [{ts}] \"{} {} HTTP/1.1\" {} {bytes} \"{referrer}\" \"{ua}\" \"{}\"",
                p.method, p.path, p.status, p.content_type
            )
        } else {
            format!("{ip} - - [{ts}] \"{} {} HTTP/1.1\" {} {bytes} \"{referrer}\" \"{ua}\"", p.method, p.path, p.status)
        }
    }

    fn push(&mut self, epoch: i64, line: String) {
        self.events.push((epoch, self.order, line));
        self.order += 1;
    }

    fn session(&mut self, bi: usize, b: &Blueprint, ip: &str, group_index: Option<u32>) -> Result<(), SynthError> {
        let t = &b.triggers;
        let rng = &mut self.rng;
        let ua = if t.contains(&Heuristic::KnownBot) {
            let base = BOT_UAS[rng.gen_range(0..BOT_UAS.len())];
            match group_index {
                Some(i) => format!("{base} r{i}"),
                None => base.to_string(),
            }
        } else {
            browser_ua(rng, group_index)
        };

        let size = match b.requests {
            Some(n) => n,
            None if b.pattern == Pattern::Dip => 1,
            None => min_requests(b.pattern) + rng.gen_range(0..=2),
        };
        let accesses = plan(b.pattern, size, rng);
        let n_slots = accesses.iter().filter_map(|a| match a { Acc::Mem(_, s, _) => Some(s + 1), Acc::Tm(_) => None }).max().unwrap_or(0);
        let slots = allocate_slots(n_slots, &b.years, self.spec.log_date.year(), &mut self.rng, bi)?;
        let rng = &mut self.rng;
        let domain = DOMAINS[rng.gen_range(0..DOMAINS.len())];
        let section = SECTIONS[rng.gen_range(0..SECTIONS.len())];
        let uri = |u: usize| -> String {
            if u.is_multiple_of(2) {
                format!("http://{domain}/{section}/{u}/")
            } else {
                format!("http://{domain}/{section}/{u}.html")
            }
        };

        let mut pending: Vec<Pending> = Vec::new();
        let mut years = Vec::new();
        let mut last_url: Option<String> = None;
        let mut first_stamp: Option<String> = None;
        for a in &accesses {
            let status = match self.rng.gen_range(0..20) {
                0 | 1 => 404,
                2 => 503,
                _ => 200,
            };
            let referrer = if self.rng.gen_bool(0.5) { last_url.clone() } else { None };
            let prefix = self.prefix();
            let p = match *a {
                Acc::Mem(u, s, off) => {
                    let stamp = stamp_of(slots[s].base + off);
                    years.push(slots[s].years_prior);
                    let target = uri(u);
                    last_url = Some(self.replay_url(&stamp, &target));
                    first_stamp.get_or_insert_with(|| stamp.clone());
                    Pending {
                        method: "GET",
                        path: format!("{prefix}{stamp}/{target}"),
                        status,
                        bytes: Some(self.rng.gen_range(500..90_000)),
                        referrer,
                        content_type: "text/html; charset=utf-8",
                        html: true,
                    }
                }
                Acc::Tm(u) => {
                    let target = uri(u);
                    let path = match self.rng.gen_range(0..4) {
                        0 if !self.spec.is_arquivo() => format!("/web/timemap/link/{target}"),
                        1 => format!("{prefix}{}*/{target}", slots.first().map_or(2015, |s| s.year)),
                        _ => format!("{prefix}*/{target}"),
                    };
                    Pending {
                        method: "GET",
                        path,
                        status,
                        bytes: Some(self.rng.gen_range(200..20_000)),
                        referrer,
                        content_type: "application/link-format",
                        html: true,
                    }
                }
            };
            pending.push(p);
        }
        let survivors = pending.len() as u32;
        let any_stamp = first_stamp.unwrap_or_else(|| format!("{}0615120000", self.spec.log_date.year() - 1));
        let page = uri(0);

        if t.contains(&Heuristic::HeadMethod) {
            let prefix = self.prefix();
            pending.push(Pending {
                method: "HEAD",
                path: format!("{prefix}{any_stamp}/{page}"),
                status: 200,
                bytes: None,
                referrer: None,
                content_type: "text/html; charset=utf-8",
                html: true,
            });
        }
        if t.contains(&Heuristic::RobotsTxt) {
            let path = match (self.spec.is_arquivo(), self.rng.gen_range(0..3)) {
                (false, 0) => "http://web.archive.org/robots.txt".to_string(),
                (true, 0) => "http://arquivo.pt/robots.txt".to_string(),
                (_, 1) => "/robots.txt?ref=synth".to_string(),
                _ => "/robots.txt".to_string(),
            };
            pending.push(Pending {
                method: "GET",
                path,
                status: 200,
                bytes: Some(1_024),
                referrer: None,
                content_type: "text/plain",
                html: false,
            });
        }
        let bs = t.contains(&Heuristic::BrowsingSpeed);
        let redirects = {
            let html_now = pending.iter().filter(|p| p.html).count();
            let mut r = usize::from(self.rng.gen_bool(0.3));
            if bs && html_now + r < 2 {
                r = 2 - html_now;
            }
            r
        };
        for _ in 0..redirects {
            let prefix = self.prefix();
            let year = self.spec.log_date.year() - self.rng.gen_range(0..5);
            pending.push(Pending {
                method: "GET",
                path: format!("{prefix}{year}/{page}"),
                status: 302,
                bytes: Some(0),
                referrer: None,
                content_type: "text/html",
                html: true,
            });
        }
        for _ in 0..self.rng.gen_range(0..=2) {
            let prefix = self.prefix();
            let (m, file, ct) =
                if self.rng.gen_bool(0.5) { ("js_", "static/app.js", "application/javascript") } else { ("cs_", "static/site.css", "text/css") };
            pending.push(Pending {
                method: "GET",
                path: format!("{prefix}{any_stamp}{m}/http://{domain}/{file}"),
                status: 200,
                bytes: Some(self.rng.gen_range(500..40_000)),
                referrer: Some(self.replay_url(&any_stamp, &page)),
                content_type: ct,
                html: false,
            });
        }
        let html = pending.iter().filter(|p| p.html).count();
        let images = if t.contains(&Heuristic::IhRatio) { 0 } else { html.div_ceil(5) };
        for k in 0..images {
            let prefix = self.prefix();
            let ext = ["png", "jpg", "gif"][k % 3];
            pending.push(Pending {
                method: "GET",
                path: format!("{prefix}{any_stamp}im_/http://{domain}/img/{k}.{ext}"),
                status: 200,
                bytes: Some(self.rng.gen_range(500..200_000)),
                referrer: Some(self.replay_url(&any_stamp, &page)),
                content_type: "image/png",
                html: false,
            });
        }
        pending.shuffle(&mut self.rng);

        let n = pending.len() as i64;
        let gap = if n > 1 { ((2 * html as u64 + 1).div_ceil(n as u64 - 1)).max(3) as i64 } else { 0 };
        let max_span = if bs { 0 } else { (n - 1).max(0) * (gap + 2) };
        let start = self.rng.gen_range(0..86_400 - 1 - max_span);
        let mut t_local = start;
        let mut times = Vec::with_capacity(pending.len());
        for i in 0..pending.len() {
            if i > 0 && !bs {
                t_local += gap + self.rng.gen_range(0..=2);
            }
            times.push(self.local_epoch(t_local));
        }
        for (p, ts) in pending.iter().zip(&times) {
            let line = self.line(ip, *ts, p, &ua);
            self.push(*ts, line);
        }
        let key = UserKey { client_token: ip.to_string(), user_agent: ua.clone() };
        self.truth.push(TruthSession {
            session_id: session_id(&key, times[0]),
            client_token: ip.to_string(),
            user_agent: ua,
            user_kind: b.user_kind,
            triggers: b.triggers.clone(),
            pattern: b.pattern,
            requests: pending.len() as u32,
            survivors,
            memento_years_prior: years,
        });
        Ok(())
    }

    fn noise(&mut self) {
        const PATHS: [&str; 6] = ["/", "/static/css/banner.css", "/details/texts", "/search.php?query=odu", "/about/", "/favicon.ico"];
        let c = self.rng.gen_range(0..65_536u32);
        let ip = format!("10.{}.{}.{}", c >> 8, c & 255, 1 + c % 250);
        let ua = browser_ua(&mut self.rng, None);
        let p = Pending {
            method: "GET",
            path: PATHS[self.rng.gen_range(0..PATHS.len())].to_string(),
            status: if self.rng.gen_bool(0.8) { 200 } else { 304 },
            bytes: Some(self.rng.gen_range(100..30_000)),
            referrer: None,
            content_type: "text/html",
            html: false,
        };
        let secs = self.rng.gen_range(0..86_400);
        let ts = self.local_epoch(secs);
        let line = self.line(&ip, ts, &p, &ua);
        self.push(ts, line);
    }

    fn malformed(&mut self) {
        let day = self.spec.log_date.format("%d").to_string();
        let line = match self.rng.gen_range(0..4) {
            0 => format!("203.0.113.9 - - [{day}/Foo/2019:00:00:00 +0000] \"GET / HTTP/1.1\" 200 1 \"-\" \"x\""),
            1 => format!("203.0.113.9 - - [{day}/Feb/2019:00:0"),
            2 => format!("203.0.113.9 - - [{day}/Feb/2019:00:00:00 +0000] \"GET / HTTP/1.1\" 2OO 1"),
            _ => "GET /index.html HTTP/1.0".to_string(),
        };
        let secs = self.rng.gen_range(0..86_400);
        let ts = self.local_epoch(secs);
        self.push(ts, line);
    }
}

/// Generates the corpus of a spec.
pub fn generate_corpus(spec: &SynthSpec) -> Result<Corpus, SynthError> {
    spec.validate()?;
    let offset_secs = if spec.is_arquivo() { 3600 } else { 0 };
    let mut g = Gen {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        next_ip: 0,
        order: 0,
        offset: FixedOffset::east_opt(offset_secs).unwrap_or_else(|| FixedOffset::east_opt(0).unwrap()),
        events: Vec::new(),
        truth: Vec::new(),
    };
    let group = spec.ua_group_size;
    for (bi, b) in spec.blueprints.iter().enumerate() {
        if b.triggers.contains(&Heuristic::UaPerIp) {
            let n = b.count.div_ceil(group) * group;
            let mut ip = String::new();
            for i in 0..n {
                if i % group == 0 {
                    ip = g.new_ip();
                }
                g.session(bi, b, &ip, Some(i % group))?;
            }
        } else {
            for _ in 0..b.count {
                let ip = g.new_ip();
                g.session(bi, b, &ip, None)?;
            }
        }
    }
    for _ in 0..spec.noise_lines {
        g.noise();
    }
    for _ in 0..spec.malformed_lines {
        g.malformed();
    }
    let mut events = core::mem::take(&mut g.events);
    events.sort_unstable_by_key(|e| (e.0, e.1));
    Ok(Corpus {
        lines: events.into_iter().map(|e| e.2).collect(),
        truth: g.truth,
        noise_lines: spec.noise_lines,
        malformed_lines: spec.malformed_lines,
    })
}

/// A spec touching every heuristic and every pattern label, with at least
/// `min_requests` lines in total.
pub fn coverage_spec(seed: u64, log_date: NaiveDate, min_requests: u64) -> SynthSpec {
    let years = alloc::vec![
        YearWeight { years_prior: 0, weight: 8 },
        YearWeight { years_prior: 1, weight: 4 },
        YearWeight { years_prior: 2, weight: 2 },
        YearWeight { years_prior: 5, weight: 1 },
        YearWeight { years_prior: 10, weight: 1 },
    ];
    let bp = |user_kind, triggers: &[Heuristic], pattern, count| Blueprint {
        count,
        user_kind,
        triggers: triggers.iter().copied().collect(),
        pattern,
        requests: None,
        years: years.clone(),
    };
    let mut blueprints = Vec::new();
    for p in Pattern::ALL {
        blueprints.push(bp(UserKind::Human, &[], p, 40));
    }
    let robot_sets: [&[Heuristic]; 8] = [
        &[Heuristic::KnownBot],
        &[Heuristic::HeadMethod],
        &[Heuristic::UaPerIp],
        &[Heuristic::RobotsTxt],
        &[Heuristic::BrowsingSpeed],
        &[Heuristic::IhRatio],
        &[Heuristic::KnownBot, Heuristic::IhRatio, Heuristic::BrowsingSpeed],
        &[Heuristic::HeadMethod, Heuristic::RobotsTxt, Heuristic::UaPerIp],
    ];
    for (i, set) in robot_sets.iter().enumerate() {
        for (j, p) in Pattern::ALL.iter().enumerate() {
            if (i + j) % 2 == 0 || *p == Pattern::Skim || *p == Pattern::Dip {
                blueprints.push(bp(UserKind::Robot, set, *p, 12));
            }
        }
    }
    let mut spec = SynthSpec {
        seed,
        log_date,
        profile: ArchiveProfile::IaWayback,
        extended: false,
        noise_lines: 0,
        malformed_lines: 0,
        ua_group_size: default_group(),
        blueprints,
    };
    // scale session counts until the corpus is large enough
    let per_round = estimate_lines(&spec);
    let rounds = min_requests.div_ceil(per_round.max(1)).max(1);
    for b in &mut spec.blueprints {
        b.count = (u64::from(b.count) * rounds).min(u64::from(u32::MAX)) as u32;
    }
    spec.noise_lines = min_requests / 20;
    spec.malformed_lines = min_requests / 1000 + 1;
    spec
}

/// A lower bound on the lines a spec produces.
fn estimate_lines(spec: &SynthSpec) -> u64 {
    spec.blueprints
        .iter()
        .map(|b| u64::from(b.count) * u64::from(b.requests.unwrap_or_else(|| min_requests(b.pattern))))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::{classify_path, RequestKind};
    use crate::bot::{classify_session, flag_ua_per_ip, KnownBotList, Thresholds};
    use crate::cleaning::{stage1_keep, stage2_keep};
    use crate::entry::{parse_line, FormatHint};
    use crate::pattern::{classify_pattern, DiveWindow};
    use crate::session::{build_sessions, Timeout};
    use crate::temporal::{TemporalReport, YearMode};
    use alloc::collections::BTreeMap;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2019, 2, 7).unwrap()
    }

    /// Runs the in-memory analysis and checks every planted answer.
    fn check(spec: &SynthSpec) {
        let corpus = generate_corpus(spec).unwrap();
        let list = KnownBotList::default();
        let mut errors = 0;
        let mut reqs = Vec::new();
        for (i, l) in corpus.lines.iter().enumerate() {
            match parse_line(l, FormatHint::Auto) {
                Ok(e) => reqs.push(classify_path(e, spec.profile).with_seq(i as u64)),
                Err(_) => errors += 1,
            }
        }
        assert_eq!(errors, corpus.malformed_lines);
        let s1: Vec<_> = reqs.into_iter().filter(stage1_keep).collect();
        let ua = flag_ua_per_ip(&s1, 20);
        let sessions = build_sessions(s1, Timeout::DEFAULT);
        assert_eq!(sessions.len(), corpus.truth.len());
        let truth: BTreeMap<&str, &TruthSession> = corpus.truth.iter().map(|t| (t.session_id.as_str(), t)).collect();
        let mut temporal = TemporalReport::new(spec.log_date, YearMode::Calendar);
        for s in &sessions {
            let t = truth.get(s.id.as_str()).unwrap_or_else(|| panic!("unplanted session {}", s.id));
            let v = classify_session(s, &ua, &list, &Thresholds::default());
            assert_eq!(v.flags(), t.triggers, "{} {:?}", s.id, t);
            assert_eq!(v.is_robot, t.user_kind == UserKind::Robot);
            let kept: Vec<_> = s.requests.iter().filter(|r| stage2_keep(r)).collect();
            assert_eq!(kept.len() as u32, t.survivors);
            let label = classify_pattern(kept.iter().copied(), DiveWindow::DEFAULT).unwrap();
            assert_eq!(label.label, t.pattern, "{:?}", t);
            for r in kept.iter().filter(|r| r.kind == RequestKind::Memento) {
                temporal.observe(v.subdataset(), r.memento_datetime.unwrap());
            }
        }
        assert_eq!(temporal.human, corpus.expected_histogram(Subdataset::Human));
        assert_eq!(temporal.robot, corpus.expected_histogram(Subdataset::Robot));
    }

    #[test]
    fn planted_answers_are_recovered() {
        check(&coverage_spec(7, date(), 3_000));
    }

    #[test]
    fn arquivo_and_extended_layouts() {
        let mut s = coverage_spec(11, date(), 1_000);
        s.profile = ArchiveProfile::Arquivo;
        check(&s);
        let mut s = coverage_spec(12, date(), 1_000);
        s.extended = true;
        check(&s);
    }

    #[test]
    fn seed_determines_output() {
        let a = generate_corpus(&coverage_spec(3, date(), 500)).unwrap();
        let b = generate_corpus(&coverage_spec(3, date(), 500)).unwrap();
        let c = generate_corpus(&coverage_spec(4, date(), 500)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.lines, c.lines);
    }

    #[test]
    fn head_dip_robot_is_one_head_line_plus_survivor() {
        let spec = SynthSpec {
            seed: 1,
            log_date: date(),
            profile: ArchiveProfile::Arquivo,
            extended: false,
            noise_lines: 0,
            malformed_lines: 0,
            ua_group_size: 21,
            blueprints: alloc::vec![Blueprint {
                count: 1,
                user_kind: UserKind::Robot,
                triggers: [Heuristic::HeadMethod].into_iter().collect(),
                pattern: Pattern::Dip,
                requests: None,
                years: default_years(),
            }],
        };
        let c = generate_corpus(&spec).unwrap();
        assert_eq!(c.lines.iter().filter(|l| l.contains("\"HEAD /wayback/") || l.contains("\"HEAD http://arquivo.pt/wayback/")).count(), 1);
        check(&spec);
    }

    #[test]
    fn validation() {
        let mut s = coverage_spec(1, date(), 10);
        s.blueprints[0].requests = Some(3);
        assert_eq!(s.blueprints[0].pattern, Pattern::Dip);
        assert_eq!(s.validate(), Err(SynthError::DipSize(0)));
        let mut s = coverage_spec(1, date(), 10);
        s.blueprints[3].requests = Some(1);
        assert!(matches!(s.validate(), Err(SynthError::TooFewRequests { .. })));
        let mut s = coverage_spec(1, date(), 10);
        s.blueprints[0].triggers.insert(Heuristic::HeadMethod);
        assert_eq!(s.validate(), Err(SynthError::HumanWithTrigger(0)));
        let mut s = coverage_spec(1, date(), 10);
        let last = s.blueprints.len() - 1;
        s.blueprints[last].triggers.clear();
        assert_eq!(s.validate(), Err(SynthError::RobotWithoutTrigger(last)));
    }

    #[test]
    fn human_user_agents_are_not_bots() {
        let list = KnownBotList::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for i in 0..200 {
            assert!(!list.matches(&browser_ua(&mut rng, None)));
            assert!(!list.matches(&browser_ua(&mut rng, Some(i))));
        }
        for b in BOT_UAS {
            assert!(list.matches(b), "{b}");
        }
    }

    #[test]
    fn malformed_lines_do_not_parse() {
        let mut s = coverage_spec(5, date(), 10);
        s.blueprints.clear();
        s.malformed_lines = 50;
        let c = generate_corpus(&s).unwrap();
        assert!(c.lines.iter().all(|l| parse_line(l, FormatHint::Auto).is_err()));
    }
}
