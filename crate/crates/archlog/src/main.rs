use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use archlog::clean::{clean_stage, CleanStage, CleaningSummary};
use archlog::config::{parse_size, resolve_tmpdir, ConfigFile};
use archlog::detect::{detect_stage, DetectOptions, KnownBots};
use archlog::ingest::{parse_stage, ParseOptions};
use archlog::pipeline::{run_pipeline, PipelineConfig};
use archlog::report::{emit, load_bundle, Emit, ReportInputs, ALL_EMITS};
use archlog::sessionize::{sessionize_stage, MemoryMeter, SortOptions};
use archlog::synth_io::{load_spec, write_corpus};
use archlog::temporal::temporal_stage;
use archlog::patterns::patterns_stage;
use archlog_core::bot::Thresholds;
use archlog_core::pattern::DiveWindow;
use archlog_core::ratio::Decimal;
use archlog_core::temporal::YearMode;
use archlog_core::{ArchiveProfile, FormatHint, Timeout};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

/// Analyze web archive access logs.
#[derive(Parser)]
#[command(name = "archlog", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// TOML file with defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for spill files. Falls back to ARCHLOG_TMPDIR.
    #[arg(long, global = true)]
    tmpdir: Option<PathBuf>,
    /// Memory for in-memory sorting, e.g. 512MiB or 2GB.
    #[arg(long, global = true)]
    memory_budget: Option<String>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse raw log files into a record stream.
    Parse(ParseArgs),
    /// Apply cleaning stage 1 or 2.
    Clean(CleanArgs),
    /// Group records into sessions.
    Sessionize(SessionizeArgs),
    /// Label sessions as human or robot.
    Detect(DetectArgs),
    /// Label sessions with access patterns.
    Patterns(PatternsArgs),
    /// Build years-prior histograms of requested mementos.
    Temporal(TemporalArgs),
    /// Assemble the report tables.
    Report(ReportArgs),
    /// Generate a labelled synthetic log.
    Synth(SynthArgs),
    /// Run every stage from raw logs to the report.
    Run(RunArgs),
}

#[derive(Args)]
struct ParseArgs {
    /// Raw log files, plain or gzip.
    #[arg(short, long = "input", num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    parse: ParseFlags,
}

#[derive(Args)]
struct ParseFlags {
    /// auto, clf or clf-extended.
    #[arg(long)]
    format: Option<FormatHint>,
    /// ia, arquivo or auto.
    #[arg(long)]
    profile: Option<ArchiveProfile>,
    /// Write unparsable lines here as JSON lines.
    #[arg(long)]
    errors_out: Option<PathBuf>,
}

#[derive(Args)]
struct CleanArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    stage: u8,
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Write the cleaning counts here (.json or .csv).
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct SessionizeArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Inactivity gap that ends a session.
    #[arg(long)]
    timeout_minutes: Option<u64>,
}

#[derive(Args)]
struct DetectFlags {
    /// Known-bot list, one pattern per line.
    #[arg(long)]
    known_bots: Option<PathBuf>,
    /// HTML requests per second.
    #[arg(long)]
    bs_threshold: Option<Decimal>,
    /// Images per HTML request.
    #[arg(long)]
    ih_threshold: Option<Decimal>,
    /// Distinct User-Agents per client.
    #[arg(long)]
    ua_ip_threshold: Option<u32>,
    /// Write per-session verdicts here as JSON lines.
    #[arg(long)]
    verdicts: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    detect: DetectFlags,
}

#[derive(Args)]
struct PatternsArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long)]
    dive_window_hours: Option<u64>,
    /// Write per-session labels here as JSON lines.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct TemporalFlags {
    /// Date to count years back from (default: the most frequent log date).
    #[arg(long, value_parser = parse_date)]
    reference_date: Option<NaiveDate>,
    /// calendar or elapsed.
    #[arg(long)]
    year_mode: Option<YearMode>,
}

#[derive(Args)]
struct TemporalArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    temporal: TemporalFlags,
}

#[derive(Args)]
struct ReportArgs {
    /// Stage-2 record stream (its sidecar carries the upstream counts).
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    patterns: PathBuf,
    #[arg(long)]
    temporal: PathBuf,
    /// Output formats: json, csv, markdown.
    #[arg(long, value_delimiter = ',')]
    emit: Vec<Emit>,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML corpus description.
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the seed in the spec.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    out: PathBuf,
    /// Write access.log.gz instead of access.log.
    #[arg(long)]
    gzip: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long = "input", num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    parse: ParseFlags,
    #[arg(long)]
    timeout_minutes: Option<u64>,
    #[command(flatten)]
    detect: DetectFlags,
    #[arg(long)]
    dive_window_hours: Option<u64>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    temporal: TemporalFlags,
    #[arg(long, value_delimiter = ',')]
    emit: Vec<Emit>,
    /// Reuse stage outputs whose settings and inputs are unchanged.
    #[arg(long)]
    resume: bool,
    /// Compress intermediate record streams.
    #[arg(long)]
    gzip_intermediate: bool,
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("`{s}`: {e} (expected YYYY-MM-DD)"))
}

struct Ctx {
    cfg: ConfigFile,
    global: Global,
}

impl Ctx {
    fn sort_options(&self) -> anyhow::Result<SortOptions> {
        let budget = match self.global.memory_budget.as_ref().or(self.cfg.memory_budget.as_ref()) {
            Some(s) => parse_size(s)?,
            None => SortOptions::DEFAULT_BUDGET,
        };
        Ok(SortOptions {
            memory_budget: budget,
            tmpdir: resolve_tmpdir(self.global.tmpdir.clone(), self.cfg.tmpdir.clone()),
        })
    }

    fn timeout(&self, flag: Option<u64>) -> anyhow::Result<Timeout> {
        match flag.or(self.cfg.timeout_minutes) {
            Some(m) => Timeout::from_minutes(m).context("timeout must be a positive number of minutes"),
            None => Ok(Timeout::DEFAULT),
        }
    }

    fn window(&self, flag: Option<u64>) -> anyhow::Result<DiveWindow> {
        match flag.or(self.cfg.dive_window_hours) {
            Some(h) => DiveWindow::from_hours(h).context("dive window must be a positive number of hours"),
            None => Ok(DiveWindow::DEFAULT),
        }
    }

    fn parse_options(&self, f: &ParseFlags) -> anyhow::Result<ParseOptions> {
        let profile = match (f.profile, self.cfg.profile.as_deref()) {
            (Some(p), _) => p,
            (None, Some(s)) => s.parse().map_err(anyhow::Error::msg)?,
            (None, None) => ArchiveProfile::default(),
        };
        Ok(ParseOptions {
            format: f.format.or(self.cfg.format).unwrap_or_default(),
            profile,
            errors_out: f.errors_out.clone().or(self.cfg.errors_out.clone()),
        })
    }

    fn detect_options(&self, f: &DetectFlags) -> anyhow::Result<DetectOptions> {
        let known_bots = match f.known_bots.as_ref().or(self.cfg.known_bots.as_ref()) {
            Some(p) => KnownBots::load(p)?,
            None => KnownBots::shipped(),
        };
        let d = Thresholds::default();
        let thresholds = Thresholds {
            browsing_speed: f.bs_threshold.or(self.cfg.bs_threshold).unwrap_or(d.browsing_speed),
            ih_ratio: f.ih_threshold.or(self.cfg.ih_threshold).unwrap_or(d.ih_ratio),
            ua_per_ip: f.ua_ip_threshold.or(self.cfg.ua_ip_threshold).unwrap_or(d.ua_per_ip),
        };
        thresholds.validate().map_err(anyhow::Error::msg)?;
        Ok(DetectOptions { known_bots, thresholds, verdicts_out: f.verdicts.clone().or(self.cfg.verdicts.clone()) })
    }

    fn temporal(&self, f: &TemporalFlags) -> anyhow::Result<(YearMode, Option<NaiveDate>)> {
        let mode = match (f.year_mode, self.cfg.year_mode.as_deref()) {
            (Some(m), _) => m,
            (None, Some(s)) => s.parse().map_err(anyhow::Error::msg)?,
            (None, None) => YearMode::default(),
        };
        Ok((mode, f.reference_date.or(self.cfg.reference_date)))
    }

    fn emits(&self, flag: &[Emit]) -> anyhow::Result<Vec<Emit>> {
        if !flag.is_empty() {
            return Ok(flag.to_vec());
        }
        match &self.cfg.emit {
            Some(v) => v.iter().map(|s| s.parse().map_err(anyhow::Error::msg)).collect(),
            None => Ok(ALL_EMITS.to_vec()),
        }
    }

    fn inputs(&self, flag: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
        let v = if flag.is_empty() { self.cfg.input.clone().unwrap_or_default() } else { flag.to_vec() };
        if v.is_empty() {
            bail!("no input files (use --input)");
        }
        for p in &v {
            if !p.exists() {
                bail!("{}: no such file", p.display());
            }
        }
        Ok(v)
    }

    fn out(&self, flag: &Option<PathBuf>) -> anyhow::Result<PathBuf> {
        flag.clone().or(self.cfg.out.clone()).context("no output path (use --out)")
    }
}

fn report_sessionize(meter: &MemoryMeter, budget: u64) {
    log::info!("peak sort memory {} of {} budget", meter.peak(), budget);
}

fn print_written(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.quiet {
        log::LevelFilter::Error
    } else {
        match cli.global.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        }
    };
    env_logger::Builder::new().filter_level(level).parse_env("ARCHLOG_LOG").init();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("archlog: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.global.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    if let Some(n) = cli.global.threads.or(cfg.threads) {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    }
    let ctx = Ctx { cfg, global: cli.global };
    match cli.cmd {
        Cmd::Parse(a) => {
            let inputs = ctx.inputs(&a.inputs)?;
            let out = ctx.out(&a.out)?;
            let m = parse_stage(&inputs, &ctx.parse_options(&a.parse)?, &out)?;
            if let Some(p) = &m.parse {
                log::info!("{} lines, {} parsed, {} errors", p.counts.lines_in, p.counts.parsed, p.counts.errors);
            }
        }
        Cmd::Clean(a) => {
            let stage = CleanStage::from_number(a.stage).context("--stage must be 1 or 2")?;
            let m = clean_stage(&a.input, &a.out, stage)?;
            if let Some(p) = &a.stats {
                CleaningSummary::of(&m).write(p)?;
            }
        }
        Cmd::Sessionize(a) => {
            let opts = ctx.sort_options()?;
            let meter = MemoryMeter::default();
            let (_, st) = sessionize_stage(&a.input, &a.out, ctx.timeout(a.timeout_minutes)?, &opts, &meter)?;
            log::info!("{} requests in {} sessions", st.requests, st.sessions);
            report_sessionize(&meter, opts.memory_budget);
        }
        Cmd::Detect(a) => {
            detect_stage(&a.input, &a.out, &ctx.detect_options(&a.detect)?)?;
        }
        Cmd::Patterns(a) => {
            let labels = a.labels.clone().or(ctx.cfg.labels.clone());
            patterns_stage(&a.input, &a.out, ctx.window(a.dive_window_hours)?, labels.as_ref())?;
        }
        Cmd::Temporal(a) => {
            let (mode, date) = ctx.temporal(&a.temporal)?;
            temporal_stage(&a.input, &a.out, mode, date)?;
        }
        Cmd::Report(a) => {
            let bundle = load_bundle(&ReportInputs { records: &a.records, patterns: &a.patterns, temporal: &a.temporal })?;
            print_written(&emit(&bundle, &ctx.emits(&a.emit)?, &a.out)?);
        }
        Cmd::Synth(a) => synth(&a)?,
        Cmd::Run(a) => {
            let mut pc = PipelineConfig::new(ctx.inputs(&a.inputs)?, ctx.out(&a.out)?);
            let po = ctx.parse_options(&a.parse)?;
            pc.format = po.format;
            pc.profile = po.profile;
            pc.errors_out = po.errors_out;
            pc.timeout = ctx.timeout(a.timeout_minutes)?;
            pc.sort = ctx.sort_options()?;
            let d = ctx.detect_options(&a.detect)?;
            pc.known_bots = d.known_bots;
            pc.thresholds = d.thresholds;
            pc.verdicts_out = d.verdicts_out;
            pc.dive_window = ctx.window(a.dive_window_hours)?;
            pc.labels_out = a.labels.clone().or(ctx.cfg.labels.clone());
            (pc.year_mode, pc.reference_date) = ctx.temporal(&a.temporal)?;
            pc.emit = ctx.emits(&a.emit)?;
            pc.resume = a.resume || ctx.cfg.resume.unwrap_or(false);
            pc.gzip_intermediate = a.gzip_intermediate || ctx.cfg.gzip_intermediate.unwrap_or(false);
            let meter = MemoryMeter::default();
            let outcome = run_pipeline(&pc, &meter)?;
            if !outcome.reused.is_empty() {
                log::info!("reused: {}", outcome.reused.join(", "));
            }
            if outcome.sessionize.is_some() {
                report_sessionize(&meter, pc.sort.memory_budget);
            }
            print_written(&outcome.written);
        }
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> anyhow::Result<()> {
    let mut spec = load_spec(&a.spec)?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let (corpus, files) = write_corpus(&spec, &a.out, a.gzip)?;
    log::info!("{} lines, {} sessions", corpus.lines.len(), corpus.truth.len());
    print_written(&[files.log, files.truth, files.expected]);
    Ok(())
}
