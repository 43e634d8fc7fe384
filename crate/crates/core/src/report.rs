//! Report tables. Every percentage travels with its numerator and
//! denominator so it can be recomputed from the bundle alone.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::archive::ArchiveProfile;
use crate::bot::{BotTally, Heuristic, Subdataset, Thresholds};
use crate::cleaning::CleaningStats;
use crate::entry::FormatHint;
use crate::features::FeatureStats;
use crate::pattern::{Pattern, PatternDistribution};
use crate::ratio::Ratio;
use crate::temporal::{TemporalReport, YearMode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub feature: String,
    pub share: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub total_requests: u64,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(stats: &FeatureStats) -> Self {
        let rows = stats
            .rows()
            .iter()
            .map(|(name, n)| FeatureRow { feature: (*name).to_string(), share: stats.share(*n) })
            .collect();
        FeatureTable { total_requests: stats.total_requests, rows }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningTable {
    pub raw_count: u64,
    pub stage1: Ratio,
    pub stage2: Ratio,
}

impl CleaningTable {
    pub fn new(stats: &CleaningStats) -> Self {
        CleaningTable { raw_count: stats.raw_count, stage1: stats.s1(), stage2: stats.s2() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotRow {
    pub heuristic: String,
    pub sessions: Ratio,
    pub requests: Ratio,
}

/// Sessions and requests flagged by each heuristic, then robots and humans.
/// Heuristic rows overlap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotTable {
    pub total_sessions: u64,
    pub total_requests: u64,
    pub rows: Vec<BotRow>,
}

/// Row order of the bot table.
pub const BOT_ROW_ORDER: [Heuristic; 6] = [
    Heuristic::KnownBot,
    Heuristic::UaPerIp,
    Heuristic::RobotsTxt,
    Heuristic::IhRatio,
    Heuristic::BrowsingSpeed,
    Heuristic::HeadMethod,
];

impl BotTable {
    pub fn new(t: &BotTally) -> Self {
        let row = |name: &str, s: u64, r: u64| BotRow {
            heuristic: name.to_string(),
            sessions: Ratio::new(s, t.total_sessions),
            requests: Ratio::new(r, t.total_requests),
        };
        let mut rows: Vec<BotRow> = BOT_ROW_ORDER
            .iter()
            .map(|h| {
                let (s, r) = t.heuristic(*h);
                row(h.label(), s, r)
            })
            .collect();
        rows.push(row("Total Robots", t.robot_sessions, t.robot_requests));
        rows.push(row("Humans", t.total_sessions - t.robot_sessions, t.total_requests - t.robot_requests));
        BotTable { total_sessions: t.total_sessions, total_requests: t.total_requests, rows }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRow {
    pub subdataset: Subdataset,
    pub label: Pattern,
    /// Of the subdataset's sessions.
    pub sessions: Ratio,
    /// Of the subdataset's requests.
    pub requests: Ratio,
    /// Memento and TimeMap requests, as shares of this label's requests.
    pub mementos: Ratio,
    pub timemaps: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternTable {
    pub rows: Vec<PatternRow>,
}

impl PatternTable {
    pub fn new(d: &PatternDistribution) -> Self {
        let mut rows = Vec::new();
        for sub in Subdataset::ALL {
            let total = d.total(sub);
            for label in Pattern::ALL {
                let c = d.get(sub, label);
                rows.push(PatternRow {
                    subdataset: sub,
                    label,
                    sessions: Ratio::new(c.sessions, total.sessions),
                    requests: Ratio::new(c.requests, total.requests),
                    mementos: Ratio::new(c.mementos, c.requests),
                    timemaps: Ratio::new(c.timemaps, c.requests),
                });
            }
        }
        PatternTable { rows }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalRow {
    pub subdataset: Subdataset,
    pub years_prior: u32,
    /// Of the subdataset's memento requests, future ones included.
    pub count: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FutureRow {
    pub subdataset: Subdataset,
    pub discarded_future: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalTable {
    /// Absent when no memento survived cleaning.
    pub reference_date: Option<NaiveDate>,
    pub year_mode: YearMode,
    pub rows: Vec<TemporalRow>,
    pub future: Vec<FutureRow>,
}

impl TemporalTable {
    pub fn new(report: &TemporalReport) -> Self {
        let mut rows = Vec::new();
        let mut future = Vec::new();
        for sub in Subdataset::ALL {
            let h = report.get(sub);
            let total = h.total();
            for (y, n) in &h.buckets {
                rows.push(TemporalRow { subdataset: sub, years_prior: *y, count: Ratio::new(*n, total) });
            }
            future.push(FutureRow { subdataset: sub, discarded_future: Ratio::new(h.discarded_future, total) });
        }
        TemporalTable { reference_date: Some(report.reference_date), year_mode: report.year_mode, rows, future }
    }

    pub fn empty(year_mode: YearMode) -> Self {
        let future = Subdataset::ALL
            .iter()
            .map(|s| FutureRow { subdataset: *s, discarded_future: Ratio::new(0, 0) })
            .collect();
        TemporalTable { reference_date: None, year_mode, rows: Vec::new(), future }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParseCounts {
    pub lines_in: u64,
    pub parsed: u64,
    pub errors: u64,
}

impl ParseCounts {
    pub fn merge(&mut self, o: &ParseCounts) {
        self.lines_in += o.lines_in;
        self.parsed += o.parsed;
        self.errors += o.errors;
    }
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub inputs: Vec<InputDigest>,
    pub format: FormatHint,
    pub profile: ArchiveProfile,
    pub parse: ParseCounts,
    pub timeout_secs: u64,
    pub thresholds: Thresholds,
    pub known_bots_sha256: String,
    pub known_bot_patterns: u64,
    pub dive_window_secs: u64,
    pub year_mode: YearMode,
    /// Set when the reference date was given rather than derived.
    pub reference_date_override: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub feature_stats: FeatureTable,
    pub cleaning_stats: CleaningTable,
    pub bot_table: BotTable,
    pub pattern_distribution: PatternTable,
    pub temporal_histograms: TemporalTable,
    pub run_metadata: RunMetadata,
}

impl ReportBundle {
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let m = &self.run_metadata;
        let _ = writeln!(s, "# archlog report\n");
        let _ = writeln!(s, "Inputs:");
        for i in &m.inputs {
            let _ = writeln!(s, "- `{}` (sha256 `{}`)", i.path, i.sha256);
        }
        let _ = writeln!(
            s,
            "\nLines read: {}, parsed: {}, malformed: {}.\n",
            m.parse.lines_in, m.parse.parsed, m.parse.errors
        );

        let _ = writeln!(s, "## Features\n\n| Feature | Count | % |\n|---|---:|---:|");
        for r in &self.feature_stats.rows {
            let _ = writeln!(s, "| {} | {} | {} |", r.feature, r.share.count, r.share.percent());
        }

        let c = &self.cleaning_stats;
        let _ = writeln!(s, "\n## Cleaning\n\n| Raw | After Stage 1 | After Stage 2 |\n|---:|---:|---:|");
        let _ = writeln!(
            s,
            "| {} | {} ({}) | {} ({}) |",
            c.raw_count,
            c.stage1.count,
            c.stage1.percent(),
            c.stage2.count,
            c.stage2.percent()
        );

        let b = &self.bot_table;
        let _ = writeln!(
            s,
            "\n## Robots\n\n{} sessions, {} requests. Heuristics are not mutually exclusive.\n",
            b.total_sessions, b.total_requests
        );
        let _ = writeln!(s, "| Heuristic | Sessions | % | Requests | % |\n|---|---:|---:|---:|---:|");
        for r in &b.rows {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} |",
                r.heuristic,
                r.sessions.count,
                r.sessions.percent(),
                r.requests.count,
                r.requests.percent()
            );
        }

        let _ = writeln!(
            s,
            "\n## Access patterns\n\n| Subdataset | Pattern | Sessions | Requests | % requests | URI-M % | URI-T % |\n|---|---|---:|---:|---:|---:|---:|"
        );
        for r in &self.pattern_distribution.rows {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} |",
                r.subdataset.as_str(),
                r.label,
                r.sessions.count,
                r.requests.count,
                r.requests.percent(),
                r.mementos.percent(),
                r.timemaps.percent()
            );
        }

        let t = &self.temporal_histograms;
        let reference = t.reference_date.map_or_else(|| "none".to_string(), |d| d.to_string());
        let _ = writeln!(
            s,
            "\n## Temporal preference\n\nReference date {reference}, {} years.\n\n| Subdataset | Years prior | Mementos | % |\n|---|---:|---:|---:|",
            t.year_mode
        );
        for r in &t.rows {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |",
                r.subdataset.as_str(),
                r.years_prior,
                r.count.count,
                r.count.percent()
            );
        }
        for f in &t.future {
            let _ = writeln!(
                s,
                "| {} | future | {} | {} |",
                f.subdataset.as_str(),
                f.discarded_future.count,
                f.discarded_future.percent()
            );
        }

        let _ = writeln!(
            s,
            "\n## Settings\n\n- profile: {}\n- timeout: {} s\n- browsing speed threshold: {} req/s\n- image-to-HTML threshold: {}\n- UA per IP threshold: {}\n- known-bot patterns: {} (sha256 `{}`)\n- dive window: {} s",
            m.profile,
            m.timeout_secs,
            m.thresholds.browsing_speed,
            m.thresholds.ih_ratio,
            m.thresholds.ua_per_ip,
            m.known_bot_patterns,
            m.known_bots_sha256,
            m.dive_window_secs
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cleaning_table_from_published_counts() {
        let t = CleaningTable::new(&CleaningStats { raw_count: 99_173_542, s1_count: 84_512_394, s2_count: 18_432_398 });
        assert_eq!(t.stage1.percent(), "85.22%");
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"count\":84512394,\"total\":99173542,\"percent\":\"85.22%\""));
    }

    #[test]
    fn bot_table_rows() {
        let mut tally = BotTally::default();
        let v = crate::bot::BotVerdict { known_bot: true, head_method: true, is_robot: true, ..Default::default() };
        tally.observe(4, &v);
        tally.observe(1, &Default::default());
        let t = BotTable::new(&tally);
        assert_eq!(t.rows.len(), 8);
        assert_eq!(t.rows[0].heuristic, "Known Bots");
        assert_eq!(t.rows[0].requests.percent(), "80.00%");
        assert_eq!(t.rows[6].sessions, Ratio::new(1, 2));
        assert_eq!(t.rows[7].requests, Ratio::new(1, 5));
    }

    #[test]
    fn pattern_rows_partition() {
        let mut d = PatternDistribution::default();
        d.observe(Subdataset::Robot, Pattern::Skim, 0, 3);
        d.observe(Subdataset::Robot, Pattern::Dip, 1, 0);
        let t = PatternTable::new(&d);
        assert_eq!(t.rows.len(), 18);
        let robot: u64 = t.rows.iter().filter(|r| r.subdataset == Subdataset::Robot).map(|r| r.requests.count).sum();
        assert_eq!(robot, 4);
        let skim = t.rows.iter().find(|r| r.subdataset == Subdataset::Robot && r.label == Pattern::Skim).unwrap();
        assert_eq!(skim.timemaps.percent(), "100.00%");
    }
}
