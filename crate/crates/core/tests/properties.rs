use std::collections::{BTreeMap, BTreeSet};

use archlog_core::bot::{classify_session, flag_ua_per_ip, Heuristic};
use archlog_core::cleaning::{stage1_keep, stage2_keep};
use archlog_core::pattern::{classify_accesses, Access, DiveWindow};
use archlog_core::ratio::{Decimal, Ratio};
use archlog_core::session::build_sessions;
use archlog_core::temporal::{years_prior, YearMode, YearsPrior};
use archlog_core::time::MementoDatetime;
use archlog_core::{
    classify_path, parse_line, ArchiveProfile, ArchiveRequest, FormatHint, KnownBotList, Pattern, ResourceClass,
    Thresholds, Timeout,
};
use chrono::{Datelike, Duration, NaiveDate};
use proptest::prelude::*;

const PATHS: [&str; 8] = [
    "/web/20150101000000/http://a.example/",
    "/web/20150101000000im_/http://a.example/logo.png",
    "/web/20160101000000/http://b.example/page.html",
    "/web/*/http://a.example/",
    "/robots.txt",
    "/web/20150101000000js_/http://a.example/app.js",
    "/static/style.css",
    "/web/20170101000000/http://c.example/photo.jpg",
];
const METHODS: [&str; 3] = ["GET", "HEAD", "POST"];
const STATUSES: [u16; 4] = [200, 302, 404, 503];

/// (token, agent, seconds, path, method, status)
type Spec = (u8, u8, u32, usize, usize, usize);

fn request(seq: u64, s: Spec) -> ArchiveRequest {
    let (tok, ua, secs, path, method, status) = s;
    let t = NaiveDate::from_ymd_opt(2019, 2, 7).unwrap().and_hms_opt(0, 0, 0).unwrap() + Duration::seconds(secs.into());
    let line = format!(
        "10.0.0.{tok} - - [{}] \"{} {} HTTP/1.1\" {} 100 \"-\" \"agent {ua}\"",
        t.format("%d/%b/%Y:%H:%M:%S +0000"),
        METHODS[method],
        PATHS[path],
        STATUSES[status]
    );
    classify_path(parse_line(&line, FormatHint::Auto).unwrap(), ArchiveProfile::Auto).with_seq(seq)
}

fn specs(max: usize) -> impl Strategy<Value = Vec<Spec>> {
    prop::collection::vec((0u8..4, 0u8..3, 0u32..5000, 0usize..8, 0usize..3, 0usize..4), 1..max)
}

proptest! {
    #[test]
    fn sessions_match_naive_split(reqs in specs(150), minutes in 1u64..20) {
        let timeout = Timeout::from_minutes(minutes).unwrap();
        let rs: Vec<ArchiveRequest> = reqs.iter().enumerate().map(|(i, s)| request(i as u64, *s)).collect();
        let got: BTreeSet<Vec<u64>> = build_sessions(rs, timeout)
            .iter()
            .map(|s| s.requests.iter().map(|r| r.seq).collect())
            .collect();

        let mut sorted: Vec<(u8, u8, u32, u64)> =
            reqs.iter().enumerate().map(|(i, s)| (s.0, s.1, s.2, i as u64)).collect();
        sorted.sort();
        let mut want = BTreeSet::new();
        let mut cur: Vec<u64> = Vec::new();
        for (i, r) in sorted.iter().enumerate() {
            if i > 0 {
                let p = sorted[i - 1];
                if (p.0, p.1) != (r.0, r.1) || u64::from(r.2 - p.2) > timeout.secs() {
                    want.insert(std::mem::take(&mut cur));
                }
            }
            cur.push(r.3);
        }
        want.insert(cur);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn verdicts_follow_the_definitions(reqs in specs(60), ua_limit in 1u32..4) {
        let rs: Vec<ArchiveRequest> = reqs.iter().enumerate().map(|(i, s)| request(i as u64, *s)).collect();
        let flagged = flag_ua_per_ip(rs.iter(), ua_limit);
        let list = KnownBotList::new(["agent 2"]).unwrap();
        let th = Thresholds { ua_per_ip: ua_limit, ..Thresholds::default() };
        let mut agents: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
        for r in &rs {
            agents.entry(r.entry.client_token.as_str()).or_default().insert(r.entry.user_agent_str().to_string());
        }
        for s in build_sessions(rs.clone(), Timeout::DEFAULT) {
            let v = classify_session(&s, &flagged, &list, &th);
            let html = s.requests.iter().filter(|r| r.resource_class == ResourceClass::Html).count() as u64;
            let images = s.requests.iter().filter(|r| r.resource_class == ResourceClass::Image).count() as u64;
            let dur = s.duration_secs();
            prop_assert_eq!(v.known_bot, s.key.user_agent == "agent 2");
            prop_assert_eq!(v.head_method, s.requests.iter().any(|r| r.entry.method == archlog_core::Method::Head));
            prop_assert_eq!(v.robots_txt, s.requests.iter().any(|r| r.kind == archlog_core::RequestKind::RobotsTxt));
            prop_assert_eq!(v.ua_per_ip, agents[s.key.client_token.as_str()].len() as u32 > ua_limit);
            // 0.5 per second, with zero duration counting as infinite from two pages on
            let bs = if dur == 0 { html >= 2 } else { 2 * html >= dur };
            prop_assert_eq!(v.browsing_speed, bs);
            prop_assert_eq!(v.ih_ratio, html > 0 && images * 10 < html);
            prop_assert_eq!(v.is_robot, !v.flags().is_empty());
            prop_assert!(v.flags().iter().all(|h| Heuristic::ALL.contains(h)));
        }
    }

    #[test]
    fn stage_two_survivors_are_a_subset(reqs in specs(80)) {
        for (i, s) in reqs.iter().enumerate() {
            let r = request(i as u64, *s);
            if stage2_keep(&r) {
                prop_assert!(stage1_keep(&r));
                prop_assert_eq!(&r.entry.method, &archlog_core::Method::Get);
                prop_assert!([200, 404, 503].contains(&r.entry.status));
            }
        }
    }

    #[test]
    fn pattern_labels_ignore_order(
        accs in prop::collection::vec((0usize..4, -400_000i64..400_000, any::<bool>()), 1..12),
        hours in 1u64..72,
    ) {
        let uris = ["u0", "u1", "u2", "u3"];
        let mut a: Vec<Access<'_>> = accs
            .iter()
            .map(|&(u, t, m)| if m { Access::memento(uris[u], t) } else { Access::timemap(uris[u]) })
            .collect();
        let w = DiveWindow::from_hours(hours).unwrap();
        let first = classify_accesses(&a, w);
        a.reverse();
        let reversed = classify_accesses(&a, w);
        prop_assert_eq!(first.label, reversed.label);
        prop_assert_eq!(first.label == Pattern::Dip, a.len() == 1);
        if a.len() > 1 {
            prop_assert_eq!(Pattern::from_flags(first.base_flags), first.label);
        }
    }

    #[test]
    fn elapsed_years_stay_within_a_year_of_calendar_years(days in 0i64..30_000, back in 0i64..20_000, dec in any::<bool>()) {
        let mut reference = NaiveDate::from_ymd_opt(1990, 1, 1).unwrap() + Duration::days(days);
        if dec {
            // the end of a year against early captures is where leap days pile up
            reference = NaiveDate::from_ymd_opt(reference.year(), 12, 31).unwrap();
        }
        let memento = MementoDatetime::new((reference - Duration::days(back)).and_hms_opt(12, 0, 0).unwrap());
        let YearsPrior::Years(cal) = years_prior(memento, reference, YearMode::Calendar) else {
            return Err(TestCaseError::fail("past memento counted as future"));
        };
        let YearsPrior::Years(el) = years_prior(memento, reference, YearMode::Elapsed) else {
            return Err(TestCaseError::fail("past memento counted as future"));
        };
        prop_assert_eq!(i64::from(cal), i64::from(reference.year() - memento.naive().year()));
        prop_assert!(el.abs_diff(cal) <= 1);
        prop_assert_eq!(i64::from(el), (reference - memento.naive().date()).num_days() / 365);
        let later = MementoDatetime::new((reference + Duration::days(400)).and_hms_opt(0, 0, 0).unwrap());
        prop_assert_eq!(years_prior(later, reference, YearMode::Calendar), YearsPrior::Future);
    }

    #[test]
    fn percentages_round_half_up(count in 0u64..1_000_000_000, extra in 0u64..1_000_000_000) {
        let total = count + extra;
        let bp = Ratio::new(count, total).basis_points();
        if total == 0 {
            prop_assert_eq!(bp, 0);
        } else {
            // bp is the nearest integer to count*10000/total, ties going up
            let (c, t, b) = (u128::from(count) * 20_000, u128::from(total), u128::from(bp));
            prop_assert!((2 * b).saturating_sub(1) * t <= c);
            prop_assert!(c < (2 * b + 1) * t);
        }
    }

    #[test]
    fn decimals_round_trip(numer in 0u64..10_000_000, scale in 0u32..7) {
        let d = Decimal::from_parts(numer, 10u64.pow(scale));
        let back: Decimal = d.to_string().parse().unwrap();
        prop_assert_eq!(back, d);
    }
}
