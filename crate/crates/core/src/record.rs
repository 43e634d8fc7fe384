//! The record passed between pipeline stages: one classified request, plus
//! its session id and robot verdict once those are known.

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::archive::ArchiveRequest;
use crate::bot::BotVerdict;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<BotVerdict>,
    pub request: ArchiveRequest,
}

impl Record {
    pub fn new(request: ArchiveRequest) -> Self {
        Record { session_id: None, verdict: None, request }
    }

    pub fn is_robot(&self) -> Option<bool> {
        self.verdict.map(|v| v.is_robot)
    }
}

impl From<ArchiveRequest> for Record {
    fn from(r: ArchiveRequest) -> Self {
        Record::new(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::{classify_path, ArchiveProfile};
    use crate::entry::{parse_line, FormatHint};

    const LINES: [&str; 3] = [
        "128.82.7.3 - - [07/Jul/2019:04:44:14 +0100] \"GET /wayback/20091223043049/http://www.cs.odu.edu/ HTTP/1.1\" 200 9593 \"-\" \"Mozilla/5.0 (X11; Ubuntu; Linux x86_64; rv:48.0) Gecko/20100101 Firefox/48.0\"",
        "1.2.3.4 web.archive.org - [07/Feb/2019:00:46:30 +0000] \"GET /web/20190207001831js_/https://connect.facebook.net/en_US/fbevents.js HTTP/1.1\" 200",
        "9.9.9.9 - - [02/Feb/2012:23:59:34 +0000] \"POST http://web.archive.org/web/20070211155651/http://212.227.83.57/cproc.aspx HTTP/1.0\" 200 12 \"-\" \"Java/1.6.0_04\" extra \"q x\"",
    ];

    #[test]
    fn json_round_trip() {
        for (i, l) in LINES.iter().enumerate() {
            let r = classify_path(parse_line(l, FormatHint::Auto).unwrap(), ArchiveProfile::Auto).with_seq(i as u64);
            let mut rec = Record::new(r);
            let text = serde_json::to_string(&rec).unwrap();
            assert!(!text.contains("session_id"));
            assert_eq!(serde_json::from_str::<Record>(&text).unwrap(), rec);
            rec.session_id = Some("0123456789abcdef".into());
            rec.verdict = Some(BotVerdict::default());
            let text = serde_json::to_string(&rec).unwrap();
            assert!(text.starts_with("{\"session_id\""));
            assert_eq!(serde_json::from_str::<Record>(&text).unwrap(), rec);
        }
    }
}
