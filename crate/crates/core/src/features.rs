//! Dataset features of a raw (uncleaned) request stream.

use serde::{Deserialize, Serialize};

use crate::archive::ArchiveRequest;
use crate::bot::KnownBotList;
use crate::entry::Method;
use crate::ratio::Ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureStats {
    pub total_requests: u64,
    pub get: u64,
    pub head: u64,
    pub propfind: u64,
    pub post: u64,
    pub options: u64,
    pub other_method: u64,
    pub status_1xx: u64,
    pub status_2xx: u64,
    pub status_3xx: u64,
    pub status_4xx: u64,
    pub status_5xx: u64,
    pub embedded_resources: u64,
    pub null_referrer: u64,
    pub si_robots: u64,
}

/// A named count, in the order the feature table lists them.
pub type FeatureRow = (&'static str, u64);

impl FeatureStats {
    /// Adds one request. `si` is the self-identification keyword list.
    pub fn observe(&mut self, r: &ArchiveRequest, si: &KnownBotList) {
        let e = &r.entry;
        self.total_requests += 1;
        match e.method {
            Method::Get => self.get += 1,
            Method::Head => self.head += 1,
            Method::Propfind => self.propfind += 1,
            Method::Post => self.post += 1,
            Method::Options => self.options += 1,
            Method::Other(_) => self.other_method += 1,
        }
        match e.status / 100 {
            1 => self.status_1xx += 1,
            2 => self.status_2xx += 1,
            3 => self.status_3xx += 1,
            4 => self.status_4xx += 1,
            _ => self.status_5xx += 1,
        }
        if r.is_embedded {
            self.embedded_resources += 1;
        }
        if e.referrer.as_deref().is_none_or(|s| s == "-") {
            self.null_referrer += 1;
        }
        if e.user_agent.as_deref().is_some_and(|ua| si.matches(ua)) {
            self.si_robots += 1;
        }
    }

    pub fn merge(&mut self, o: &FeatureStats) {
        self.total_requests += o.total_requests;
        self.get += o.get;
        self.head += o.head;
        self.propfind += o.propfind;
        self.post += o.post;
        self.options += o.options;
        self.other_method += o.other_method;
        self.status_1xx += o.status_1xx;
        self.status_2xx += o.status_2xx;
        self.status_3xx += o.status_3xx;
        self.status_4xx += o.status_4xx;
        self.status_5xx += o.status_5xx;
        self.embedded_resources += o.embedded_resources;
        self.null_referrer += o.null_referrer;
        self.si_robots += o.si_robots;
    }

    pub fn rows(&self) -> [FeatureRow; 15] {
        [
            ("GET", self.get),
            ("HEAD", self.head),
            ("PROPFIND", self.propfind),
            ("POST", self.post),
            ("OPTIONS", self.options),
            ("Other methods", self.other_method),
            ("1xx", self.status_1xx),
            ("2xx", self.status_2xx),
            ("3xx", self.status_3xx),
            ("4xx", self.status_4xx),
            ("5xx", self.status_5xx),
            ("Embedded Resources", self.embedded_resources),
            ("Null Referrer", self.null_referrer),
            ("SI Robots", self.si_robots),
            ("Total Requests", self.total_requests),
        ]
    }

    pub fn share(&self, count: u64) -> Ratio {
        Ratio::new(count, self.total_requests)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::{classify_path, ArchiveProfile};
    use crate::entry::{parse_line, FormatHint};

    fn obs(stats: &mut FeatureStats, line: &str) {
        let r = classify_path(parse_line(line, FormatHint::Auto).unwrap(), ArchiveProfile::Auto);
        stats.observe(&r, &KnownBotList::builtin());
    }

    #[test]
    fn empty_corpus() {
        let s = FeatureStats::default();
        assert!(s.rows().iter().all(|(_, n)| *n == 0));
        assert_eq!(s.share(s.get).percent(), "0.00%");
    }

    #[test]
    fn one_head_request() {
        let mut s = FeatureStats::default();
        obs(&mut s, "199.16.157.100_0_0 - - [07/Jul/2019:14:00:02 +0100] \"HEAD /wayback/20170625001353/http://www.fabricadochocolate.com HTTP/1.1\" 200 - \"-\" \"Twitterbot/1.0\"");
        assert_eq!(s.share(s.head).percent(), "100.00%");
        assert_eq!((s.get, s.status_2xx, s.null_referrer, s.si_robots), (0, 1, 1, 1));
    }

    #[test]
    fn counts_by_class() {
        let mut s = FeatureStats::default();
        obs(&mut s, "1.1.1.1 - - [07/Feb/2019:00:18:31 +0000] \"GET /web/20190207001831im_/http://a.org/x.png HTTP/1.1\" 200 5 \"https://web.archive.org/web/20190207001831/http://a.org/\" \"Mozilla/5.0\"");
        obs(&mut s, "1.1.1.1 - - [07/Feb/2019:00:18:31 +0000] \"PROPFIND / HTTP/1.1\" 405 5 \"-\" \"Mozilla/5.0\"");
        obs(&mut s, "1.1.1.1 - - [07/Feb/2019:00:18:31 +0000] \"GET /web/2019/http://a.org/ HTTP/1.1\" 302 0 \"-\" \"MySpider\"");
        assert_eq!((s.total_requests, s.get, s.propfind), (3, 2, 1));
        assert_eq!((s.status_2xx, s.status_3xx, s.status_4xx), (1, 1, 1));
        assert_eq!((s.embedded_resources, s.null_referrer, s.si_robots), (1, 2, 1));
        assert_eq!(Ratio::new(97_987_295, 99_173_542).percent(), "98.80%");
    }
}
