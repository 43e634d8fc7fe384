//! Archive semantics of a request path: mementos, TimeMaps, robots.txt.
//!
//! Recognized replay shapes, after an optional `scheme://host` prefix:
//!
//! | path                                   | kind      |
//! |----------------------------------------|-----------|
//! | `<prefix>/<4-14 digits>[xx_]/<URI-R>`   | memento   |
//! | `<prefix>/*/<URI-R>`                    | timemap   |
//! | `<prefix>/<digits>*/<URI-R>`            | timemap   |
//! | any of the above with a trailing `*`    | timemap   |
//! | `<prefix>/timemap/<format>/<URI-R>`     | timemap   |
//! | `/robots.txt`, `/robots.txt?...`        | robots_txt|
//!
//! `<prefix>` is `/web` for the Wayback Machine and `/wayback` for Arquivo.pt.
//! The URI-R is the rest of the path, byte for byte.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entry::LogEntry;
use crate::time::{parse_memento_datetime, MementoDatetime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchiveProfile {
    /// Internet Archive Wayback Machine, `/web/`.
    IaWayback,
    /// Arquivo.pt, `/wayback/`.
    Arquivo,
    /// Either prefix.
    #[default]
    Auto,
}

impl ArchiveProfile {
    fn prefixes(self) -> &'static [&'static str] {
        match self {
            ArchiveProfile::IaWayback => &["/web/"],
            ArchiveProfile::Arquivo => &["/wayback/"],
            ArchiveProfile::Auto => &["/web/", "/wayback/"],
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ArchiveProfile::IaWayback => "ia",
            ArchiveProfile::Arquivo => "arquivo",
            ArchiveProfile::Auto => "auto",
        }
    }
}

impl FromStr for ArchiveProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ia" | "ia_wayback" | "wayback" => Ok(ArchiveProfile::IaWayback),
            "arquivo" | "pt" => Ok(ArchiveProfile::Arquivo),
            "auto" => Ok(ArchiveProfile::Auto),
            other => Err(alloc::format!("unknown archive profile `{other}` (expected ia, arquivo or auto)")),
        }
    }
}

impl fmt::Display for ArchiveProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Memento,
    Timemap,
    RobotsTxt,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceClass {
    Html,
    Image,
    Stylesheet,
    Script,
    Font,
    OtherEmbedded,
    Unknown,
}

impl ResourceClass {
    pub fn is_embedded(self) -> bool {
        !matches!(self, ResourceClass::Html | ResourceClass::Unknown)
    }
}

/// Replay-mode suffix on a stamp, e.g. `im_` in `20190207001831im_`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modifier {
    Image,
    Stylesheet,
    Script,
    Other,
}

impl Modifier {
    fn from_suffix(s: &str) -> Option<Modifier> {
        let b = s.as_bytes();
        if b.len() != 3 || b[2] != b'_' || !b[0].is_ascii_lowercase() || !b[1].is_ascii_lowercase() {
            return None;
        }
        Some(match s {
            "im_" => Modifier::Image,
            "cs_" => Modifier::Stylesheet,
            "js_" => Modifier::Script,
            _ => Modifier::Other,
        })
    }

    fn resource_class(self) -> Option<ResourceClass> {
        match self {
            Modifier::Image => Some(ResourceClass::Image),
            Modifier::Stylesheet => Some(ResourceClass::Stylesheet),
            Modifier::Script => Some(ResourceClass::Script),
            Modifier::Other => None,
        }
    }
}

/// A log entry with its archive meaning attached.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArchiveRequest {
    /// Position in the input, used to order requests logged in the same second.
    pub seq: u64,
    pub entry: LogEntry,
    pub kind: RequestKind,
    pub uri_r: Option<String>,
    /// Replay path segment of a memento as written, modifier included.
    pub stamp: Option<String>,
    pub memento_datetime: Option<MementoDatetime>,
    pub resource_class: ResourceClass,
    pub is_embedded: bool,
}

impl ArchiveRequest {
    pub fn with_seq(mut self, seq: u64) -> Self {
        self.seq = seq;
        self
    }

    /// The part of the path in front of the stamp of a memento, e.g.
    /// `http://web.archive.org/web/`.
    pub fn replay_prefix(&self) -> Option<&str> {
        let stamp = self.stamp.as_deref()?;
        let uri = self.uri_r.as_deref()?;
        let cut = self.entry.path.len().checked_sub(stamp.len() + 1 + uri.len())?;
        self.entry.path.get(..cut)
    }

    pub fn modifier(&self) -> Option<Modifier> {
        let s = self.stamp.as_deref()?;
        let digits = s.bytes().take_while(u8::is_ascii_digit).count();
        Modifier::from_suffix(&s[digits..])
    }

    pub fn heap_size(&self) -> usize {
        self.entry.heap_size()
            + self.uri_r.as_ref().map_or(0, String::len)
            + self.stamp.as_ref().map_or(0, String::len)
    }
}

/// Removes a leading `scheme://host`, leaving the origin-form path.
/// Returns `None` if the result does not start with `/`.
fn origin_form(path: &str) -> Option<&str> {
    let rest = match path.find("://") {
        Some(i) if i > 0 && path[..i].bytes().all(|b| b.is_ascii_alphabetic()) && !path.starts_with('/') => {
            let after = &path[i + 3..];
            &after[after.find('/')?..]
        }
        _ => path,
    };
    rest.starts_with('/').then_some(rest)
}

struct Shape<'a> {
    kind: RequestKind,
    uri_r: Option<&'a str>,
    stamp: Option<&'a str>,
    datetime: Option<MementoDatetime>,
    modifier: Option<Modifier>,
}

impl<'a> Shape<'a> {
    fn other() -> Self {
        Shape { kind: RequestKind::Other, uri_r: None, stamp: None, datetime: None, modifier: None }
    }

    fn timemap(uri: &'a str) -> Self {
        Shape { kind: RequestKind::Timemap, uri_r: Some(uri), ..Shape::other() }
    }
}

fn shape_of(path: &str, profile: ArchiveProfile) -> Shape<'_> {
    let Some(rest) = origin_form(path) else { return Shape::other() };
    if rest == "/robots.txt" || rest.starts_with("/robots.txt?") {
        return Shape { kind: RequestKind::RobotsTxt, ..Shape::other() };
    }
    let Some(after) = profile.prefixes().iter().find_map(|p| rest.strip_prefix(p)) else {
        return Shape::other();
    };
    let Some((seg, uri)) = after.split_once('/') else { return Shape::other() };
    if seg == "timemap" {
        return match uri.split_once('/') {
            Some((fmt, u)) if !fmt.is_empty() && !u.is_empty() => Shape::timemap(u),
            _ => Shape::other(),
        };
    }
    if uri.is_empty() {
        return Shape::other();
    }
    if seg == "*" {
        return Shape::timemap(uri);
    }
    let digits = seg.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return Shape::other();
    }
    let tail = &seg[digits..];
    if tail == "*" {
        return Shape::timemap(uri);
    }
    let modifier = if tail.is_empty() {
        None
    } else {
        match Modifier::from_suffix(tail) {
            Some(m) => Some(m),
            None => return Shape::other(),
        }
    };
    let Ok(datetime) = parse_memento_datetime(&seg[..digits]) else { return Shape::other() };
    if uri.ends_with('*') {
        return Shape::timemap(uri);
    }
    Shape { kind: RequestKind::Memento, uri_r: Some(uri), stamp: Some(seg), datetime: Some(datetime), modifier }
}

/// Assigns kind, URI-R, Memento-Datetime, and resource class to a parsed entry.
pub fn classify_path(entry: LogEntry, profile: ArchiveProfile) -> ArchiveRequest {
    let shape = shape_of(&entry.path, profile);
    let class = resource_class_of(&entry, &shape, profile);
    let kind = shape.kind;
    let uri_r = shape.uri_r.map(ToString::to_string);
    let stamp = shape.stamp.map(ToString::to_string);
    let memento_datetime = shape.datetime;
    ArchiveRequest {
        seq: 0,
        entry,
        kind,
        uri_r,
        stamp,
        memento_datetime,
        resource_class: class,
        is_embedded: class.is_embedded(),
    }
}

/// Resource class of an already classified request.
pub fn classify_resource(request: &ArchiveRequest, profile: ArchiveProfile) -> ResourceClass {
    let shape = Shape {
        kind: request.kind,
        uri_r: request.uri_r.as_deref(),
        stamp: request.stamp.as_deref(),
        datetime: request.memento_datetime,
        modifier: request.modifier(),
    };
    resource_class_of(&request.entry, &shape, profile)
}

fn resource_class_of(entry: &LogEntry, shape: &Shape<'_>, profile: ArchiveProfile) -> ResourceClass {
    match shape.kind {
        RequestKind::Timemap => return ResourceClass::Html,
        RequestKind::RobotsTxt => return ResourceClass::Unknown,
        RequestKind::Memento | RequestKind::Other => {}
    }
    if let Some(c) = shape.modifier.and_then(Modifier::resource_class) {
        return c;
    }
    if let Some(c) = entry.extras.iter().find_map(|e| class_from_content_type(&e.text)) {
        return c;
    }
    let target = shape.uri_r.unwrap_or(&entry.path);
    if let Some(c) = class_from_extension(target) {
        return c;
    }
    let memento_referrer = entry
        .referrer
        .as_deref()
        .is_some_and(|r| shape_of(r, profile).kind == RequestKind::Memento);
    if memento_referrer {
        ResourceClass::OtherEmbedded
    } else {
        ResourceClass::Unknown
    }
}

/// Maps a logged content-type (`text/html; charset=utf-8`) to a class.
/// Tokens that are not media types yield `None`.
pub fn class_from_content_type(token: &str) -> Option<ResourceClass> {
    let media = token.split(';').next()?.trim();
    let (top, sub) = media.split_once('/')?;
    if sub.is_empty()
        || !sub.bytes().all(|b| b.is_ascii_alphanumeric() || b"+-.".contains(&b))
        || !top.bytes().all(|b| b.is_ascii_alphabetic())
    {
        return None;
    }
    let top = top.to_ascii_lowercase();
    let sub = sub.to_ascii_lowercase();
    let class = match (top.as_str(), sub.as_str()) {
        ("text", "html") | ("application", "xhtml+xml") => ResourceClass::Html,
        ("image", _) => ResourceClass::Image,
        ("text", "css") => ResourceClass::Stylesheet,
        ("text" | "application", "javascript" | "x-javascript" | "ecmascript") => ResourceClass::Script,
        ("font", _) | ("application", "vnd.ms-fontobject") => ResourceClass::Font,
        ("application", s) if s.starts_with("font-") || s.starts_with("x-font-") => ResourceClass::Font,
        ("text" | "application" | "audio" | "video" | "multipart" | "model", _) => ResourceClass::OtherEmbedded,
        _ => return None,
    };
    Some(class)
}

/// Classifies by the extension of the path component of a URI.
/// Returns `None` for extensions outside the known sets.
pub fn class_from_extension(uri: &str) -> Option<ResourceClass> {
    let after_scheme = match uri.find("://") {
        Some(i) => &uri[i + 3..],
        None => uri,
    };
    let path = match after_scheme.find(['/', '?', '#']) {
        Some(i) if after_scheme.as_bytes()[i] == b'/' => &after_scheme[i..],
        _ => "",
    };
    let path = &path[..path.find(['?', '#']).unwrap_or(path.len())];
    let last = &path[path.rfind('/').map_or(0, |i| i + 1)..];
    let Some(dot) = last.rfind('.') else { return Some(ResourceClass::Html) };
    let ext = &last[dot + 1..];
    if ext.is_empty() {
        return Some(ResourceClass::Html);
    }
    let is = |set: &[&str]| set.iter().any(|e| e.eq_ignore_ascii_case(ext));
    if is(&["htm", "html", "php", "asp", "aspx", "jsp"]) {
        Some(ResourceClass::Html)
    } else if is(&["png", "jpg", "jpeg", "gif", "ico", "svg", "webp", "bmp"]) {
        Some(ResourceClass::Image)
    } else if is(&["css"]) {
        Some(ResourceClass::Stylesheet)
    } else if is(&["js"]) {
        Some(ResourceClass::Script)
    } else if is(&["woff", "woff2", "ttf", "eot", "otf"]) {
        Some(ResourceClass::Font)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entry::{parse_line, FormatHint};
    use alloc::format;

    fn req(path: &str, profile: ArchiveProfile) -> ArchiveRequest {
        let line = format!("1.2.3.4 - - [07/Feb/2019:00:00:00 +0000] \"GET {path} HTTP/1.1\" 200 1 \"-\" \"ua\"");
        classify_path(parse_line(&line, FormatHint::Auto).unwrap(), profile)
    }

    #[test]
    fn memento_paths() {
        let r = req("/wayback/20091223043049/http://www.cs.odu.edu/", ArchiveProfile::Arquivo);
        assert_eq!(r.kind, RequestKind::Memento);
        assert_eq!(r.uri_r.as_deref(), Some("http://www.cs.odu.edu/"));
        assert_eq!(r.memento_datetime.unwrap().to_stamp(), "20091223043049");
        assert_eq!(r.resource_class, ResourceClass::Html);
        assert_eq!(r.replay_prefix(), Some("/wayback/"));
        let r = req("http://web.archive.org/web/20070211155651/http://212.227.83.57/cproc.aspx", ArchiveProfile::IaWayback);
        assert_eq!(r.kind, RequestKind::Memento);
        assert_eq!(r.replay_prefix(), Some("http://web.archive.org/web/"));
    }

    #[test]
    fn profile_selects_prefix() {
        assert_eq!(req("/wayback/20091223043049/http://a.pt/", ArchiveProfile::IaWayback).kind, RequestKind::Other);
        assert_eq!(req("/web/20091223043049/http://a.pt/", ArchiveProfile::Arquivo).kind, RequestKind::Other);
        assert_eq!(req("/web/20091223043049/http://a.pt/", ArchiveProfile::Auto).kind, RequestKind::Memento);
        assert_eq!(req("/wayback/20091223043049/http://a.pt/", ArchiveProfile::Auto).kind, RequestKind::Memento);
    }

    #[test]
    fn timemap_paths() {
        for p in [
            "/web/*/http://maestro.haarp.alaska.edu/",
            "/web/20130715000000*/http://maestro.haarp.alaska.edu/",
            "http://wayback.archive.org/web/*/http://www.goloco.org/users/D5EWwXI",
            "/web/timemap/link/http://maestro.haarp.alaska.edu/",
        ] {
            let r = req(p, ArchiveProfile::IaWayback);
            assert_eq!(r.kind, RequestKind::Timemap, "{p}");
            assert!(r.memento_datetime.is_none());
        }
        let r = req("/web/*/http://maestro.haarp.alaska.edu/*", ArchiveProfile::IaWayback);
        assert_eq!(r.kind, RequestKind::Timemap);
        assert_eq!(r.uri_r.as_deref(), Some("http://maestro.haarp.alaska.edu/*"));
        assert_eq!(req("/web/2013/http://a.org/*", ArchiveProfile::IaWayback).kind, RequestKind::Timemap);
    }

    #[test]
    fn robots_paths() {
        for p in ["/robots.txt", "http://web.archive.org/robots.txt", "/robots.txt?ref=x"] {
            let r = req(p, ArchiveProfile::Auto);
            assert_eq!(r.kind, RequestKind::RobotsTxt, "{p}");
            assert!(r.uri_r.is_none() && r.memento_datetime.is_none());
        }
        assert_eq!(req("/robots.txt.bak", ArchiveProfile::Auto).kind, RequestKind::Other);
    }

    #[test]
    fn other_paths() {
        for p in ["/", "/web/", "/web/2019/", "/web/abc/http://a.org/", "/web/201/http://a.org/", "/web/20191301/http://a.org/", "/static/js/wb.js", "/web/2019zz/http://a.org/", "/web/2019abc_/http://a.org/"] {
            assert_eq!(req(p, ArchiveProfile::Auto).kind, RequestKind::Other, "{p}");
        }
    }

    #[test]
    fn modifiers() {
        let r = req("/web/20190207001831im_/http://a.org/logo", ArchiveProfile::Auto);
        assert_eq!(r.kind, RequestKind::Memento);
        assert_eq!(r.memento_datetime.unwrap().to_stamp(), "20190207001831");
        assert_eq!(r.resource_class, ResourceClass::Image);
        assert!(r.is_embedded);
        assert_eq!(r.replay_prefix(), Some("/web/"));
        let r = req("/web/20190207001831if_/http://a.org/", ArchiveProfile::Auto);
        assert_eq!(r.resource_class, ResourceClass::Html);
        assert_eq!(req("/web/2019js_/http://a.org/x", ArchiveProfile::Auto).resource_class, ResourceClass::Script);
        assert_eq!(req("/web/2019cs_/http://a.org/x", ArchiveProfile::Auto).resource_class, ResourceClass::Stylesheet);
    }

    #[test]
    fn extension_classes() {
        assert_eq!(class_from_extension("http://www.cs.odu.edu/"), Some(ResourceClass::Html));
        assert_eq!(class_from_extension("http://www.fabricadochocolate.com"), Some(ResourceClass::Html));
        assert_eq!(class_from_extension("https://connect.facebook.net/en_US/fbevents.js"), Some(ResourceClass::Script));
        assert_eq!(class_from_extension("http://a.org/IMG.JPG?x=1"), Some(ResourceClass::Image));
        assert_eq!(class_from_extension("http://a.org/f.woff2"), Some(ResourceClass::Font));
        assert_eq!(class_from_extension("http://a.org/s.css#x"), Some(ResourceClass::Stylesheet));
        assert_eq!(class_from_extension("http://a.org/doc.pdf"), None);
        assert_eq!(class_from_extension("http://a.org/story.php?title=x.png"), Some(ResourceClass::Html));
        assert_eq!(class_from_extension("a.org/dir.v2/page"), Some(ResourceClass::Html));
    }

    #[test]
    fn content_type_beats_extension() {
        let line = "0.0.122.100_1_0 web.archive.org - [07/Feb/2019:16:56:15 +0000] \"GET /web/20130304102141/http://maestro.haarp.alaska.edu/logo.png HTTP/2.0\" 404 0 \"-\" \"ua\" 10.859 MISS 10.856 \"text/html; charset=utf-8\" - \"-\"";
        let r = classify_path(parse_line(line, FormatHint::Auto).unwrap(), ArchiveProfile::Auto);
        assert_eq!(r.resource_class, ResourceClass::Html);
        assert!(!r.is_embedded);
        assert_eq!(class_from_content_type("image/png"), Some(ResourceClass::Image));
        assert_eq!(class_from_content_type("application/javascript"), Some(ResourceClass::Script));
        assert_eq!(class_from_content_type("font/woff2"), Some(ResourceClass::Font));
        assert_eq!(class_from_content_type("10.859"), None);
        assert_eq!(class_from_content_type("-"), None);
        assert_eq!(class_from_content_type("wwwb-app104"), None);
    }

    #[test]
    fn unknown_extension_depends_on_referrer() {
        let with_ref = "1.2.3.4 - - [07/Feb/2019:00:00:00 +0000] \"GET /web/2019/http://a.org/doc.pdf HTTP/1.1\" 200 1 \"https://web.archive.org/web/20190101000000/http://a.org/\" \"ua\"";
        let r = classify_path(parse_line(with_ref, FormatHint::Auto).unwrap(), ArchiveProfile::Auto);
        assert_eq!(r.resource_class, ResourceClass::OtherEmbedded);
        assert!(r.is_embedded);
        assert_eq!(req("/web/2019/http://a.org/doc.pdf", ArchiveProfile::Auto).resource_class, ResourceClass::Unknown);
    }

    #[test]
    fn classification_is_idempotent() {
        for p in ["/web/20190207001831im_/http://a.org/logo", "/web/*/http://a.org/", "/robots.txt", "/"] {
            let r = req(p, ArchiveProfile::Auto);
            let again = classify_path(r.entry.clone(), ArchiveProfile::Auto);
            assert_eq!(again, r);
            assert_eq!(classify_resource(&r, ArchiveProfile::Auto), r.resource_class);
        }
    }
}
