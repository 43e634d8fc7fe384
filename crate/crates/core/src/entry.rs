//! Access-log line parsing.
//!
//! Two layouts are understood:
//!
//! * `clf`: Common Log Format, optionally followed by the quoted referrer and
//!   User-Agent of the Combined format.
//! * `clf_extended`: the archive front-end variant. It may carry a vhost
//!   between the client and the timestamp, may stop right after the status
//!   code, and may append any number of trailing fields after the User-Agent
//!   (timings, cache status, content-type, backend host). Trailing fields are
//!   kept verbatim in [`LogEntry::extras`]. A quoted field left open at the end
//!   of the line is accepted as truncated.
//!
//! Quoted fields keep their backslash escapes as written, so a parsed entry
//! prints back to the same line.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ParseError, Reason};
use crate::time::{parse_clf_timestamp, LogTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatHint {
    #[default]
    Auto,
    Clf,
    ClfExtended,
}

impl core::str::FromStr for FormatHint {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(FormatHint::Auto),
            "clf" | "combined" => Ok(FormatHint::Clf),
            "clf-extended" | "extended" => Ok(FormatHint::ClfExtended),
            o => Err(alloc::format!("unknown log format `{o}` (expected auto, clf or clf-extended)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Get,
    Head,
    Post,
    Propfind,
    Options,
    Other(String),
}

impl Method {
    pub fn parse(s: &str) -> Method {
        match s {
            "GET" => Method::Get,
            "HEAD" => Method::Head,
            "POST" => Method::Post,
            "PROPFIND" => Method::Propfind,
            "OPTIONS" => Method::Options,
            other => Method::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Method::Get => "GET",
            Method::Head => "HEAD",
            Method::Post => "POST",
            Method::Propfind => "PROPFIND",
            Method::Options => "OPTIONS",
            Method::Other(s) => s,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(d)?;
        Ok(Method::parse(&s))
    }
}

/// A field following the User-Agent in extended layouts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtraField {
    pub text: String,
    pub quoted: bool,
}

/// How much of the optional tail a line carried, so it can be printed back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Layout {
    /// Number of the bytes / referrer / User-Agent fields present (0 to 3).
    pub trailing: u8,
    /// The last quoted field ran to the end of the line without closing.
    pub truncated: bool,
}

/// One parsed access-log line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LogEntry {
    /// Anonymized client address, kept whole including `_n_m` suffixes.
    pub client_token: String,
    pub vhost: Option<String>,
    /// `None` when the line has no identity column (vhost layouts).
    pub ident: Option<String>,
    pub auth_user: String,
    pub timestamp: LogTime,
    pub method: Method,
    pub path: String,
    pub http_version: Option<String>,
    pub status: u16,
    pub bytes: Option<u64>,
    pub referrer: Option<String>,
    pub user_agent: Option<String>,
    pub extras: Vec<ExtraField>,
    pub layout: Layout,
}

impl LogEntry {
    /// The User-Agent, empty when absent.
    pub fn user_agent_str(&self) -> &str {
        self.user_agent.as_deref().unwrap_or("")
    }

    /// Rough heap footprint, used for memory budgeting.
    pub fn heap_size(&self) -> usize {
        let opt = |s: &Option<String>| s.as_ref().map_or(0, String::len);
        self.client_token.len()
            + opt(&self.vhost)
            + opt(&self.ident)
            + self.auth_user.len()
            + self.path.len()
            + opt(&self.http_version)
            + opt(&self.referrer)
            + opt(&self.user_agent)
            + self.extras.iter().map(|e| e.text.len() + core::mem::size_of::<ExtraField>()).sum::<usize>()
            + match &self.method {
                Method::Other(s) => s.len(),
                _ => 0,
            }
    }
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.client_token)?;
        if let Some(v) = &self.vhost {
            write!(f, " {v}")?;
        }
        if let Some(i) = &self.ident {
            write!(f, " {i}")?;
        }
        write!(f, " {} [{}] \"{} {}", self.auth_user, self.timestamp, self.method, self.path)?;
        if let Some(v) = &self.http_version {
            write!(f, " {v}")?;
        }
        write!(f, "\" {}", self.status)?;
        let t = self.layout.trailing;
        let last_quoted = if self.extras.is_empty() { t } else { 4 };
        let close = |f: &mut fmt::Formatter<'_>, idx: u8| -> fmt::Result {
            if self.layout.truncated && idx == last_quoted {
                Ok(())
            } else {
                f.write_str("\"")
            }
        };
        if t >= 1 {
            match self.bytes {
                Some(b) => write!(f, " {b}")?,
                None => f.write_str(" -")?,
            }
        }
        if t >= 2 {
            write!(f, " \"{}", self.referrer.as_deref().unwrap_or("-"))?;
            close(f, 2)?;
        }
        if t >= 3 {
            write!(f, " \"{}", self.user_agent.as_deref().unwrap_or("-"))?;
            close(f, 3)?;
        }
        let n = self.extras.len();
        for (i, e) in self.extras.iter().enumerate() {
            if e.quoted {
                write!(f, " \"{}", e.text)?;
                if !(self.layout.truncated && i + 1 == n) {
                    f.write_str("\"")?;
                }
            } else {
                write!(f, " {}", e.text)?;
            }
        }
        Ok(())
    }
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

enum Quoted<'a> {
    Closed(&'a str),
    Open(&'a str),
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        let b = self.s.as_bytes();
        while self.pos < b.len() && (b[self.pos] == b' ' || b[self.pos] == b'\t') {
            self.pos += 1;
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn peek(&self) -> Option<u8> {
        self.s.as_bytes().get(self.pos).copied()
    }

    fn bare(&mut self) -> &'a str {
        let b = self.s.as_bytes();
        let start = self.pos;
        while self.pos < b.len() && b[self.pos] != b' ' && b[self.pos] != b'\t' {
            self.pos += 1;
        }
        &self.s[start..self.pos]
    }

    /// Cursor sits on an opening quote.
    fn quoted(&mut self) -> Quoted<'a> {
        let b = self.s.as_bytes();
        let start = self.pos + 1;
        let mut i = start;
        while i < b.len() {
            match b[i] {
                b'\\' => i += 2,
                b'"' => {
                    self.pos = i + 1;
                    return Quoted::Closed(&self.s[start..i]);
                }
                _ => i += 1,
            }
        }
        self.pos = b.len();
        Quoted::Open(&self.s[start.min(b.len())..])
    }
}

fn is_hostname(tok: &str) -> bool {
    tok.contains('.')
        && !tok.starts_with('.')
        && !tok.ends_with('.')
        && tok.bytes().any(|c| c.is_ascii_alphabetic())
        && tok.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'.' || c == b'-')
}

fn opt_dash(s: &str) -> Option<String> {
    if s == "-" {
        None
    } else {
        Some(s.to_string())
    }
}

/// Parses one physical log line.
pub fn parse_line(line: &str, hint: FormatHint) -> Result<LogEntry, ParseError> {
    match hint {
        FormatHint::Clf => parse_with(line, false),
        FormatHint::ClfExtended => parse_with(line, true),
        FormatHint::Auto => parse_with(line, true).or_else(|e| parse_with(line, false).map_err(|_| e)),
    }
}

fn parse_with(line: &str, extended: bool) -> Result<LogEntry, ParseError> {
    let line = line.trim_end_matches(['\r', '\n', ' ', '\t']);
    let mut c = Cursor { s: line, pos: 0 };
    c.skip_ws();

    let mut prefix: [&str; 4] = [""; 4];
    let mut n = 0;
    loop {
        c.skip_ws();
        match c.peek() {
            None => return Err(ParseError::new(c.pos, Reason::MissingFields)),
            Some(b'[') => break,
            Some(_) => {
                let at = c.pos;
                let tok = c.bare();
                if n == 4 {
                    return Err(ParseError::new(at, Reason::UnexpectedField));
                }
                prefix[n] = tok;
                n += 1;
            }
        }
    }
    let (client, vhost, ident, auth) = match (n, extended) {
        (3, true) if is_hostname(prefix[1]) => (prefix[0], Some(prefix[1]), None, prefix[2]),
        (3, _) => (prefix[0], None, Some(prefix[1]), prefix[2]),
        (4, true) => (prefix[0], Some(prefix[1]), Some(prefix[2]), prefix[3]),
        (0..=2, _) => return Err(ParseError::new(c.pos, Reason::MissingFields)),
        _ => return Err(ParseError::new(c.pos, Reason::UnexpectedField)),
    };

    let open = c.pos;
    let close = line[open..].find(']').ok_or(ParseError::new(open, Reason::UnbalancedBracket))? + open;
    let timestamp = parse_clf_timestamp(&line[open + 1..close]).map_err(|e| e.shifted(open + 1))?;
    c.pos = close + 1;

    c.skip_ws();
    let req_at = c.pos;
    match c.peek() {
        None => return Err(ParseError::new(c.pos, Reason::MissingFields)),
        Some(b'"') => {}
        Some(_) => return Err(ParseError::new(c.pos, Reason::BadRequest)),
    }
    let request = match c.quoted() {
        Quoted::Closed(r) => r,
        Quoted::Open(_) => return Err(ParseError::new(req_at, Reason::UnbalancedQuote)),
    };
    let (method, path, http_version) = split_request(request).ok_or(ParseError::new(req_at, Reason::BadRequest))?;

    c.skip_ws();
    if c.at_end() {
        return Err(ParseError::new(c.pos, Reason::MissingFields));
    }
    let status_at = c.pos;
    let status = parse_status(c.bare()).ok_or(ParseError::new(status_at, Reason::BadStatus))?;

    let mut entry = LogEntry {
        client_token: client.to_string(),
        vhost: vhost.map(ToString::to_string),
        ident: ident.map(ToString::to_string),
        auth_user: auth.to_string(),
        timestamp,
        method: Method::parse(method),
        path: path.to_string(),
        http_version: http_version.map(ToString::to_string),
        status,
        bytes: None,
        referrer: None,
        user_agent: None,
        extras: Vec::new(),
        layout: Layout::default(),
    };

    c.skip_ws();
    if c.at_end() {
        return if extended { Ok(entry) } else { Err(ParseError::new(c.pos, Reason::MissingFields)) };
    }
    let bytes_at = c.pos;
    let bytes = c.bare();
    entry.bytes = match bytes {
        "-" => None,
        d if !d.is_empty() && d.len() <= 19 && d.bytes().all(|b| b.is_ascii_digit()) => {
            Some(d.parse().map_err(|_| ParseError::new(bytes_at, Reason::BadBytes))?)
        }
        _ => return Err(ParseError::new(bytes_at, Reason::BadBytes)),
    };
    entry.layout.trailing = 1;

    for slot in 0..2 {
        c.skip_ws();
        match c.peek() {
            None => return Ok(entry),
            Some(b'"') => {}
            Some(_) if extended => break,
            Some(_) => return Err(ParseError::new(c.pos, Reason::TrailingFields)),
        }
        let at = c.pos;
        let text = match c.quoted() {
            Quoted::Closed(t) => t,
            Quoted::Open(t) if extended => {
                entry.layout.truncated = true;
                t
            }
            Quoted::Open(_) => return Err(ParseError::new(at, Reason::UnbalancedQuote)),
        };
        if slot == 0 {
            entry.referrer = opt_dash(text);
        } else {
            entry.user_agent = opt_dash(text);
        }
        entry.layout.trailing += 1;
    }

    loop {
        c.skip_ws();
        let Some(first) = c.peek() else { break };
        if !extended {
            return Err(ParseError::new(c.pos, Reason::TrailingFields));
        }
        if first == b'"' {
            match c.quoted() {
                Quoted::Closed(t) => entry.extras.push(ExtraField { text: t.to_string(), quoted: true }),
                Quoted::Open(t) => {
                    entry.layout.truncated = true;
                    entry.extras.push(ExtraField { text: t.to_string(), quoted: true });
                }
            }
        } else {
            let t = c.bare();
            entry.extras.push(ExtraField { text: t.to_string(), quoted: false });
        }
    }
    Ok(entry)
}

fn split_request(req: &str) -> Option<(&str, &str, Option<&str>)> {
    let (method, rest) = req.split_once(' ')?;
    if method.is_empty() || rest.is_empty() {
        return None;
    }
    match rest.rsplit_once(' ') {
        Some((path, version)) if version.starts_with("HTTP/") && !path.is_empty() => Some((method, path, Some(version))),
        _ => Some((method, rest, None)),
    }
}

fn parse_status(tok: &str) -> Option<u16> {
    if tok.len() != 3 || !tok.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let v: u16 = tok.parse().ok()?;
    (100..=599).contains(&v).then_some(v)
}
