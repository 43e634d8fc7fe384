//! Report assembly and the json / csv / markdown emitters.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use archlog_core::bot::{Subdataset, Thresholds};
use archlog_core::cleaning::CleaningStats;
use archlog_core::pattern::Pattern;
use archlog_core::ratio::Ratio;
use archlog_core::report::{
    BotRow, BotTable, CleaningTable, FeatureRow, FeatureTable, FutureRow, PatternRow, PatternTable, ReportBundle,
    RunMetadata, TemporalRow, TemporalTable,
};
use archlog_core::temporal::YearMode;
use archlog_core::Timeout;
use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::manifest::{Manifest, TOOL_VERSION};
use crate::patterns::{write_json, PatternsOutput};
use crate::temporal::TemporalOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Emit {
    Json,
    Csv,
    Markdown,
}

impl FromStr for Emit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "json" => Ok(Emit::Json),
            "csv" => Ok(Emit::Csv),
            "markdown" | "md" => Ok(Emit::Markdown),
            other => Err(format!("unknown output format `{other}` (expected json, csv or markdown)")),
        }
    }
}

pub const ALL_EMITS: [Emit; 3] = [Emit::Json, Emit::Csv, Emit::Markdown];

/// Assembles the bundle from the stage-2 manifest and the two analysis
/// outputs.
pub fn build_bundle(m: &Manifest, patterns: &PatternsOutput, temporal: &TemporalOutput) -> ReportBundle {
    let parse = m.parse.clone();
    let features = parse.as_ref().map(|p| p.features).unwrap_or_default();
    let cleaning = CleaningStats {
        raw_count: parse.as_ref().map_or(0, |p| p.counts.parsed),
        s1_count: m.clean1.map_or(0, |c| c.kept),
        s2_count: m.clean2.map_or(0, |c| c.kept),
    };
    let detect = m.detect.clone();
    let tally = detect.as_ref().map(|d| d.tally.clone()).unwrap_or_default();
    let temporal_table = match &temporal.report {
        Some(r) => TemporalTable::new(r),
        None => TemporalTable::empty(temporal.year_mode),
    };
    ReportBundle {
        feature_stats: FeatureTable::new(&features),
        cleaning_stats: CleaningTable::new(&cleaning),
        bot_table: BotTable::new(&tally),
        pattern_distribution: PatternTable::new(&patterns.distribution),
        temporal_histograms: temporal_table,
        run_metadata: RunMetadata {
            tool_version: TOOL_VERSION.to_string(),
            inputs: parse.as_ref().map(|p| p.inputs.clone()).unwrap_or_default(),
            format: parse.as_ref().map(|p| p.format).unwrap_or_default(),
            profile: parse.as_ref().map(|p| p.profile).unwrap_or_default(),
            parse: parse.as_ref().map(|p| p.counts).unwrap_or_default(),
            timeout_secs: m.sessionize.map_or(Timeout::DEFAULT.secs(), |s| s.timeout_secs),
            thresholds: detect.as_ref().map_or_else(Thresholds::default, |d| d.thresholds),
            known_bots_sha256: detect.as_ref().map(|d| d.known_bots_sha256.clone()).unwrap_or_default(),
            known_bot_patterns: detect.as_ref().map_or(0, |d| d.known_bot_patterns),
            dive_window_secs: patterns.dive_window_secs,
            year_mode: temporal.year_mode,
            reference_date_override: temporal.reference_date_override,
        },
    }
}

/// Inputs of the report stage.
pub struct ReportInputs<'a> {
    pub records: &'a Path,
    pub patterns: &'a Path,
    pub temporal: &'a Path,
}

/// Reads the stage outputs, checks they derive from the same record stream,
/// and builds the bundle.
pub fn load_bundle(inputs: &ReportInputs<'_>) -> Result<ReportBundle> {
    let m = Manifest::read(inputs.records)?;
    for p in [inputs.patterns, inputs.temporal] {
        if let Ok(side) = Manifest::read(p) {
            if side.parent != m.fingerprint {
                return Err(Error::BadInput {
                    path: p.into(),
                    message: format!("was not computed from {}", inputs.records.display()),
                });
            }
        }
    }
    let patterns: PatternsOutput = crate::patterns::read_json(inputs.patterns)?;
    let temporal: TemporalOutput = crate::patterns::read_json(inputs.temporal)?;
    Ok(build_bundle(&m, &patterns, &temporal))
}

/// Writes the requested formats into `dir` and returns the files written.
pub fn emit(bundle: &ReportBundle, formats: &[Emit], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    let mut written = Vec::new();
    for f in formats {
        match f {
            Emit::Json => {
                let p = dir.join("report.json");
                write_json(&p, bundle)?;
                written.push(p);
            }
            Emit::Csv => {
                for (name, bytes) in csv_tables(bundle)? {
                    let p = dir.join(name);
                    crate::io::write_file(&p, &bytes).map_err(|source| Error::Io { path: p.clone(), source })?;
                    written.push(p);
                }
            }
            Emit::Markdown => {
                let p = dir.join("report.md");
                crate::io::write_file(&p, bundle.to_markdown().as_bytes())
                    .map_err(|source| Error::Io { path: p.clone(), source })?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::BadInput { path: PathBuf::from("<csv>"), message: e.to_string() }
}

fn ratio_cells(r: &Ratio) -> [String; 3] {
    [r.count.to_string(), r.total.to_string(), r.percent()]
}

/// The CSV files of a bundle, by file name.
pub fn csv_tables(b: &ReportBundle) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let mut out = Vec::new();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["feature", "count", "total", "percent"]).map_err(csv_err)?;
    for r in &b.feature_stats.rows {
        let [c, t, p] = ratio_cells(&r.share);
        w.write_record([r.feature.as_str(), &c, &t, &p]).map_err(csv_err)?;
    }
    out.push(("features.csv", w.into_inner().map_err(csv_err)?));

    let mut w = csv::Writer::from_writer(Vec::new());
    let c = &b.cleaning_stats;
    w.write_record(["raw", "stage1", "stage1_percent", "stage2", "stage2_percent"]).map_err(csv_err)?;
    w.write_record([
        c.raw_count.to_string(),
        c.stage1.count.to_string(),
        c.stage1.percent(),
        c.stage2.count.to_string(),
        c.stage2.percent(),
    ])
    .map_err(csv_err)?;
    out.push(("cleaning.csv", w.into_inner().map_err(csv_err)?));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "heuristic",
        "sessions",
        "total_sessions",
        "sessions_percent",
        "requests",
        "total_requests",
        "requests_percent",
    ])
    .map_err(csv_err)?;
    for r in &b.bot_table.rows {
        let [s, st, sp] = ratio_cells(&r.sessions);
        let [q, qt, qp] = ratio_cells(&r.requests);
        w.write_record([r.heuristic.as_str(), &s, &st, &sp, &q, &qt, &qp]).map_err(csv_err)?;
    }
    out.push(("bots.csv", w.into_inner().map_err(csv_err)?));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "subdataset",
        "label",
        "uri_kind",
        "requests",
        "subdataset_requests",
        "percent",
        "sessions",
        "subdataset_sessions",
    ])
    .map_err(csv_err)?;
    for r in &b.pattern_distribution.rows {
        for (kind, n) in [("memento", r.mementos.count), ("timemap", r.timemaps.count)] {
            let share = Ratio::new(n, r.requests.total);
            w.write_record([
                r.subdataset.as_str(),
                r.label.as_str(),
                kind,
                &n.to_string(),
                &r.requests.total.to_string(),
                &share.percent(),
                &r.sessions.count.to_string(),
                &r.sessions.total.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.push(("patterns.csv", w.into_inner().map_err(csv_err)?));

    let mut w = csv::Writer::from_writer(Vec::new());
    let t = &b.temporal_histograms;
    let reference = t.reference_date.map(|d| d.to_string()).unwrap_or_default();
    w.write_record(["subdataset", "years_prior", "count", "total", "percent", "reference_date", "year_mode"])
        .map_err(csv_err)?;
    for r in &t.rows {
        let [c, tot, p] = ratio_cells(&r.count);
        w.write_record([r.subdataset.as_str(), &r.years_prior.to_string(), &c, &tot, &p, &reference, t.year_mode.as_str()])
            .map_err(csv_err)?;
    }
    for f in &t.future {
        let [c, tot, p] = ratio_cells(&f.discarded_future);
        w.write_record([f.subdataset.as_str(), "future", &c, &tot, &p, &reference, t.year_mode.as_str()])
            .map_err(csv_err)?;
    }
    out.push(("temporal.csv", w.into_inner().map_err(csv_err)?));
    Ok(out)
}

/// The tables of a bundle rebuilt from its CSV files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTables {
    pub feature_stats: FeatureTable,
    pub cleaning_stats: CleaningTable,
    pub bot_table: BotTable,
    pub pattern_distribution: PatternTable,
    pub temporal_histograms: TemporalTable,
}

fn rows(bytes: &[u8]) -> Result<Vec<csv::StringRecord>> {
    csv::Reader::from_reader(bytes).records().collect::<std::result::Result<_, _>>().map_err(csv_err)
}

fn num(s: &str) -> Result<u64> {
    s.parse().map_err(|_| csv_err(format!("`{s}` is not a count")))
}

fn sub(s: &str) -> Result<Subdataset> {
    match s {
        "human" => Ok(Subdataset::Human),
        "robot" => Ok(Subdataset::Robot),
        _ => Err(csv_err(format!("unknown subdataset `{s}`"))),
    }
}

/// Parses the CSV files written by [`csv_tables`], checking every printed
/// percentage against its numerator and denominator.
pub fn read_csv_tables(files: &[(&str, Vec<u8>)]) -> Result<CsvTables> {
    let get = |name: &str| {
        files.iter().find(|(n, _)| *n == name).map(|(_, b)| b.as_slice()).ok_or_else(|| csv_err(format!("no {name}")))
    };
    let ratio = |c: &str, t: &str, p: &str| -> Result<Ratio> {
        let r = Ratio::new(num(c)?, num(t)?);
        if r.percent() != p {
            return Err(csv_err(format!("{c}/{t} is not {p}")));
        }
        Ok(r)
    };

    let mut frows = Vec::new();
    for r in rows(get("features.csv")?)? {
        frows.push(FeatureRow { feature: r[0].to_string(), share: ratio(&r[1], &r[2], &r[3])? });
    }
    let total_requests = frows.first().map_or(0, |r| r.share.total);
    if frows.is_empty() {
        return Err(csv_err("features.csv has no rows"));
    }
    let feature_stats = FeatureTable { total_requests, rows: frows };

    let c = rows(get("cleaning.csv")?)?;
    let c = c.first().ok_or_else(|| csv_err("cleaning.csv has no rows"))?;
    let raw = num(&c[0])?;
    let cleaning_stats =
        CleaningTable { raw_count: raw, stage1: ratio(&c[1], &raw.to_string(), &c[2])?, stage2: ratio(&c[3], &raw.to_string(), &c[4])? };

    let mut brows = Vec::new();
    for r in rows(get("bots.csv")?)? {
        brows.push(BotRow {
            heuristic: r[0].to_string(),
            sessions: ratio(&r[1], &r[2], &r[3])?,
            requests: ratio(&r[4], &r[5], &r[6])?,
        });
    }
    let bot_table = BotTable {
        total_sessions: brows.first().map_or(0, |r| r.sessions.total),
        total_requests: brows.first().map_or(0, |r| r.requests.total),
        rows: brows,
    };

    let prows_raw = rows(get("patterns.csv")?)?;
    let mut prows = Vec::new();
    for pair in prows_raw.chunks(2) {
        let [m, t] = pair else { return Err(csv_err("patterns.csv rows come in memento/timemap pairs")) };
        if &m[2] != "memento" || &t[2] != "timemap" || m[0] != t[0] || m[1] != t[1] {
            return Err(csv_err("patterns.csv rows come in memento/timemap pairs"));
        }
        let (mementos, timemaps) = (num(&m[3])?, num(&t[3])?);
        ratio(&m[3], &m[4], &m[5])?;
        ratio(&t[3], &t[4], &t[5])?;
        let requests = mementos + timemaps;
        prows.push(PatternRow {
            subdataset: sub(&m[0])?,
            label: m[1].parse::<Pattern>().map_err(csv_err)?,
            sessions: Ratio::new(num(&m[6])?, num(&m[7])?),
            requests: Ratio::new(requests, num(&m[4])?),
            mementos: Ratio::new(mementos, requests),
            timemaps: Ratio::new(timemaps, requests),
        });
    }
    let pattern_distribution = PatternTable { rows: prows };

    let mut trows = Vec::new();
    let mut future = Vec::new();
    let mut reference_date = None;
    let mut year_mode = YearMode::Calendar;
    for r in rows(get("temporal.csv")?)? {
        let share = ratio(&r[2], &r[3], &r[4])?;
        if !r[5].is_empty() {
            reference_date = Some(NaiveDate::from_str(&r[5]).map_err(csv_err)?);
        }
        year_mode = r[6].parse().map_err(csv_err)?;
        if &r[1] == "future" {
            future.push(FutureRow { subdataset: sub(&r[0])?, discarded_future: share });
        } else {
            trows.push(TemporalRow { subdataset: sub(&r[0])?, years_prior: num(&r[1])? as u32, count: share });
        }
    }
    let temporal_histograms = TemporalTable { reference_date, year_mode, rows: trows, future };

    Ok(CsvTables { feature_stats, cleaning_stats, bot_table, pattern_distribution, temporal_histograms })
}
