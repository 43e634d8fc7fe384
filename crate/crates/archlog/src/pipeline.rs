//! The whole chain in one call, with optional resume.
//!
//! `run` calls the same stage functions as the individual subcommands, so its
//! intermediate files match a hand-run chain byte for byte. Intermediates go
//! to `DIR/stages/`, the report to `DIR`.

use std::path::{Path, PathBuf};

use archlog_core::bot::Thresholds;
use archlog_core::pattern::DiveWindow;
use archlog_core::report::ReportBundle;
use archlog_core::temporal::YearMode;
use archlog_core::{ArchiveProfile, FormatHint, Timeout};
use chrono::NaiveDate;

use crate::clean::{clean_stage, CleanStage};
use crate::detect::{detect_stage, DetectOptions, KnownBots};
use crate::error::{IoContext, Result};
use crate::ingest::{digest_inputs, parse_fingerprint, parse_stage, ParseOptions};
use crate::manifest::{fingerprint, Manifest};
use crate::patterns::{patterns_stage, read_json, PatternsOutput};
use crate::report::{build_bundle, emit, Emit, ALL_EMITS};
use crate::sessionize::{sessionize_stage, MemoryMeter, SessionizeStats, SortOptions};
use crate::temporal::{temporal_stage, TemporalOutput, TemporalSettings};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub format: FormatHint,
    pub profile: ArchiveProfile,
    pub errors_out: Option<PathBuf>,
    pub timeout: Timeout,
    pub sort: SortOptions,
    pub known_bots: KnownBots,
    pub thresholds: Thresholds,
    pub verdicts_out: Option<PathBuf>,
    pub dive_window: DiveWindow,
    pub labels_out: Option<PathBuf>,
    pub reference_date: Option<NaiveDate>,
    pub year_mode: YearMode,
    pub emit: Vec<Emit>,
    pub resume: bool,
    pub gzip_intermediate: bool,
}

impl PipelineConfig {
    /// Defaults for everything but the inputs and the output directory.
    pub fn new(inputs: Vec<PathBuf>, out_dir: PathBuf) -> Self {
        PipelineConfig {
            inputs,
            out_dir,
            format: FormatHint::default(),
            profile: ArchiveProfile::default(),
            errors_out: None,
            timeout: Timeout::DEFAULT,
            sort: SortOptions { memory_budget: SortOptions::DEFAULT_BUDGET, tmpdir: std::env::temp_dir() },
            known_bots: KnownBots::shipped(),
            thresholds: Thresholds::default(),
            verdicts_out: None,
            dive_window: DiveWindow::DEFAULT,
            labels_out: None,
            reference_date: None,
            year_mode: YearMode::default(),
            emit: ALL_EMITS.to_vec(),
            resume: false,
            gzip_intermediate: false,
        }
    }
}

/// Intermediate file locations under `DIR/stages/`.
#[derive(Debug, Clone)]
pub struct StagePaths {
    pub parsed: PathBuf,
    pub s1: PathBuf,
    pub sessions: PathBuf,
    pub detected: PathBuf,
    pub s2: PathBuf,
    pub patterns: PathBuf,
    pub temporal: PathBuf,
}

impl StagePaths {
    pub fn new(out_dir: &Path, gzip: bool) -> Self {
        let d = out_dir.join("stages");
        let ext = if gzip { "ndjson.gz" } else { "ndjson" };
        StagePaths {
            parsed: d.join(format!("parsed.{ext}")),
            s1: d.join(format!("s1.{ext}")),
            sessions: d.join(format!("sessions.{ext}")),
            detected: d.join(format!("detected.{ext}")),
            s2: d.join(format!("s2.{ext}")),
            patterns: d.join("patterns.json"),
            temporal: d.join("temporal.json"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub bundle: ReportBundle,
    pub written: Vec<PathBuf>,
    pub paths: StagePaths,
    /// Stages whose earlier output was reused.
    pub reused: Vec<&'static str>,
    /// Absent when the sessionize output was reused.
    pub sessionize: Option<SessionizeStats>,
}

/// The manifest of `path` if it was produced with fingerprint `expected`.
fn reusable(path: &Path, expected: &str) -> Option<Manifest> {
    if !path.exists() {
        return None;
    }
    Manifest::read(path).ok().filter(|m| m.fingerprint == expected)
}

fn side_ok(p: &Option<PathBuf>) -> bool {
    p.as_ref().is_none_or(|p| p.exists())
}

pub fn run_pipeline(cfg: &PipelineConfig, meter: &MemoryMeter) -> Result<PipelineOutcome> {
    let paths = StagePaths::new(&cfg.out_dir, cfg.gzip_intermediate);
    let stages = cfg.out_dir.join("stages");
    std::fs::create_dir_all(&stages).at(&stages)?;
    let mut reused = Vec::new();
    let mut resume = cfg.resume;

    // Once one stage reruns, everything after it reruns too.
    let parse_expected = if resume {
        parse_fingerprint(&digest_inputs(&cfg.inputs)?, cfg.format, cfg.profile)
    } else {
        String::new()
    };
    let parsed = match reusable(&paths.parsed, &parse_expected).filter(|_| resume && side_ok(&cfg.errors_out)) {
        Some(m) => {
            reused.push("parse");
            m
        }
        None => {
            resume = false;
            log::info!("parse: {} input file(s)", cfg.inputs.len());
            let opts = ParseOptions { format: cfg.format, profile: cfg.profile, errors_out: cfg.errors_out.clone() };
            parse_stage(&cfg.inputs, &opts, &paths.parsed)?
        }
    };

    let step = |resume: &mut bool,
                reused: &mut Vec<&'static str>,
                name: &'static str,
                out: &Path,
                expected: String,
                side: bool,
                f: &mut dyn FnMut() -> Result<Manifest>|
     -> Result<Manifest> {
        if *resume && side {
            if let Some(m) = reusable(out, &expected) {
                reused.push(name);
                return Ok(m);
            }
        }
        *resume = false;
        log::info!("{name}");
        f()
    };

    let s1 = step(
        &mut resume,
        &mut reused,
        "clean1",
        &paths.s1,
        fingerprint(&parsed.fingerprint, "clean1", &()),
        true,
        &mut || clean_stage(&paths.parsed, &paths.s1, CleanStage::One),
    )?;

    let mut sess_stats = None;
    let sessions = step(
        &mut resume,
        &mut reused,
        "sessionize",
        &paths.sessions,
        fingerprint(&s1.fingerprint, "sessionize", &cfg.timeout.secs()),
        true,
        &mut || {
            let (m, st) = sessionize_stage(&paths.s1, &paths.sessions, cfg.timeout, &cfg.sort, meter)?;
            sess_stats = Some(st);
            Ok(m)
        },
    )?;

    let dopts = DetectOptions {
        known_bots: cfg.known_bots.clone(),
        thresholds: cfg.thresholds,
        verdicts_out: cfg.verdicts_out.clone(),
    };
    let detected = step(
        &mut resume,
        &mut reused,
        "detect",
        &paths.detected,
        fingerprint(&sessions.fingerprint, "detect", &dopts.settings()),
        side_ok(&cfg.verdicts_out),
        &mut || detect_stage(&paths.sessions, &paths.detected, &dopts),
    )?;

    let s2 = step(
        &mut resume,
        &mut reused,
        "clean2",
        &paths.s2,
        fingerprint(&detected.fingerprint, "clean2", &()),
        true,
        &mut || clean_stage(&paths.detected, &paths.s2, CleanStage::Two),
    )?;

    // The two analyses both read s2; a rerun of one does not force the other.
    let analysis_resume = resume;
    let mut patterns_out: Option<PatternsOutput> = None;
    let mut r = analysis_resume;
    step(
        &mut r,
        &mut reused,
        "patterns",
        &paths.patterns,
        fingerprint(&s2.fingerprint, "patterns", &cfg.dive_window.secs()),
        side_ok(&cfg.labels_out),
        &mut || {
            let (m, out) = patterns_stage(&paths.s2, &paths.patterns, cfg.dive_window, cfg.labels_out.as_ref())?;
            patterns_out = Some(out);
            Ok(m)
        },
    )?;
    let patterns = match patterns_out {
        Some(p) => p,
        None => read_json(&paths.patterns)?,
    };

    let mut temporal_out: Option<TemporalOutput> = None;
    let mut r = analysis_resume;
    step(
        &mut r,
        &mut reused,
        "temporal",
        &paths.temporal,
        fingerprint(
            &s2.fingerprint,
            "temporal",
            &TemporalSettings { year_mode: cfg.year_mode, reference_date: cfg.reference_date },
        ),
        true,
        &mut || {
            let (m, out) = temporal_stage(&paths.s2, &paths.temporal, cfg.year_mode, cfg.reference_date)?;
            temporal_out = Some(out);
            Ok(m)
        },
    )?;
    let temporal = match temporal_out {
        Some(t) => t,
        None => read_json(&paths.temporal)?,
    };

    let bundle = build_bundle(&s2, &patterns, &temporal);
    let written = emit(&bundle, &cfg.emit, &cfg.out_dir)?;
    Ok(PipelineOutcome { bundle, written, paths, reused, sessionize: sess_stats })
}
