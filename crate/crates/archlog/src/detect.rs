//! Robot detection over a sessionized record stream.
//!
//! The input must be in the order the sessionizer writes: shards, then
//! client tokens, then User-Agents, then time. A first pass counts distinct
//! User-Agents per token, which needs only the current token in memory
//! because each token's records are contiguous. The second pass reads the
//! file with two cursors: the leading one summarizes a session, the trailing
//! one re-reads the same records and writes them with the verdict. No
//! session is held in memory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use archlog_core::bot::{classify_summary, BotTally, BotVerdict, KnownBotList, SessionSummary, Thresholds};
use serde::Serialize;

use crate::error::{Error, IoContext, Progress, Result};
use crate::manifest::{DetectSection, Manifest};
use crate::records::{JsonLines, RecordReader, BATCH};
use crate::sessionize::shard_of;

/// A loaded known-bot list and the digest of its source text.
#[derive(Debug, Clone)]
pub struct KnownBots {
    pub list: KnownBotList,
    pub sha256: String,
}

impl KnownBots {
    pub fn from_text(text: &str) -> std::result::Result<Self, archlog_core::bot::EmptyBotList> {
        Ok(KnownBots { list: KnownBotList::parse(text)?, sha256: crate::io::sha256_bytes(text.as_bytes()) })
    }

    pub fn shipped() -> Self {
        KnownBots::from_text(archlog_core::bot::DEFAULT_KNOWN_BOTS).unwrap_or_else(|_| KnownBots {
            list: KnownBotList::builtin(),
            sha256: String::new(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).at(path)?;
        KnownBots::from_text(&text).map_err(|e| Error::BadInput { path: path.into(), message: e.to_string() })
    }
}

#[derive(Debug, Clone)]
pub struct DetectOptions {
    pub known_bots: KnownBots,
    pub thresholds: Thresholds,
    /// Per-session verdicts, as JSON lines.
    pub verdicts_out: Option<PathBuf>,
}

#[derive(Serialize)]
pub struct DetectSettings<'a> {
    pub thresholds: &'a Thresholds,
    pub known_bots_sha256: &'a str,
}

impl DetectOptions {
    pub fn settings(&self) -> DetectSettings<'_> {
        DetectSettings { thresholds: &self.thresholds, known_bots_sha256: &self.known_bots.sha256 }
    }
}

#[derive(Serialize)]
struct VerdictLine<'a> {
    session_id: &'a str,
    client_token: &'a str,
    user_agent: &'a str,
    requests: u32,
    start: i64,
    end: i64,
    verdict: &'a BotVerdict,
}

pub fn detect_stage(input: &Path, out: &Path, opts: &DetectOptions) -> Result<Manifest> {
    let mut progress = Progress::default();
    run(input, out, opts, &mut progress).map_err(|e| e.in_stage("detect", progress))
}

fn not_sessionized(path: &Path, line: u64, why: &str) -> Error {
    Error::BadInput {
        path: path.into(),
        message: format!("record {line}: {why}; the input must come from `archlog sessionize`"),
    }
}

/// Client tokens with more distinct User-Agents than the threshold.
fn ua_census(input: &Path, threshold: u32) -> Result<BTreeSet<String>> {
    let mut flagged = BTreeSet::new();
    let mut reader = RecordReader::open(input)?;
    let mut cur: Option<(usize, String)> = None;
    let mut last_ua = String::new();
    let mut distinct = 0u64;
    let mut n = 0u64;
    while let Some(r) = reader.next_record()? {
        n += 1;
        let e = &r.request.entry;
        let key = (shard_of(&e.client_token), e.client_token.clone());
        if cur.as_ref() != Some(&key) {
            // strictly increasing, so a token cannot come back later
            if cur.as_ref().is_some_and(|c| *c > key) {
                return Err(not_sessionized(input, n, "client tokens are not grouped"));
            }
            if let Some((_, t)) = cur.take() {
                if distinct > u64::from(threshold) {
                    flagged.insert(t);
                }
            }
            cur = Some(key);
            distinct = 0;
            last_ua.clear();
        }
        let ua = e.user_agent_str();
        if distinct == 0 || ua != last_ua {
            if distinct > 0 && ua < last_ua.as_str() {
                return Err(not_sessionized(input, n, "User-Agents are not sorted within a client token"));
            }
            distinct += 1;
            last_ua.clear();
            last_ua.push_str(ua);
        }
    }
    if let Some((_, t)) = cur {
        if distinct > u64::from(threshold) {
            flagged.insert(t);
        }
    }
    Ok(flagged)
}

fn run(input: &Path, out: &Path, opts: &DetectOptions, progress: &mut Progress) -> Result<Manifest> {
    opts.thresholds.validate().map_err(|e| Error::Config(e.into()))?;
    let upstream = Manifest::read_or_empty(input)?;
    let flagged = ua_census(input, opts.thresholds.ua_per_ip)?;

    let mut lead = RecordReader::open(input)?;
    let mut trail = RecordReader::open(input)?;
    let mut writer = JsonLines::create(out)?;
    let mut verdicts = opts.verdicts_out.as_deref().map(JsonLines::create).transpose()?;
    let mut tally = BotTally::default();
    let mut batch = Vec::with_capacity(BATCH);
    loop {
        let mut summary = SessionSummary::default();
        let mut id: Option<String> = None;
        while let Some(r) = lead.peek()? {
            let Some(rid) = r.session_id.as_deref() else {
                return Err(not_sessionized(input, lead.lines_read(), "missing session id"));
            };
            match id.as_deref() {
                Some(cur) if cur != rid => break,
                Some(_) => {}
                None => id = Some(rid.to_string()),
            }
            summary.observe(&r.request);
            lead.next_record()?;
        }
        let Some(id) = id else { break };
        let ua_flagged = flagged.contains(&summary.client_token);
        let verdict = classify_summary(&summary, ua_flagged, &opts.known_bots.list, &opts.thresholds);
        tally.observe(summary.requests as usize, &verdict);
        if let Some(v) = verdicts.as_mut() {
            v.write(&VerdictLine {
                session_id: &id,
                client_token: &summary.client_token,
                user_agent: &summary.user_agent,
                requests: summary.requests,
                start: summary.start,
                end: summary.end,
                verdict: &verdict,
            })?;
        }
        for _ in 0..summary.requests {
            let Some(mut r) = trail.next_record()? else {
                return Err(Error::BadInput { path: input.into(), message: "file changed while reading".into() });
            };
            progress.records_in += 1;
            r.verdict = Some(verdict);
            batch.push(r);
            if batch.len() >= BATCH {
                writer.write_batch(&batch)?;
                batch.clear();
                progress.records_out = writer.count();
            }
        }
    }
    writer.write_batch(&batch)?;
    let written = writer.finish()?;
    progress.records_out = written;
    if let Some(v) = verdicts {
        v.finish()?;
    }
    let mut m = upstream.derive("detect", &opts.settings());
    m.records = written;
    m.detect = Some(DetectSection {
        thresholds: opts.thresholds,
        known_bots_sha256: opts.known_bots.sha256.clone(),
        known_bot_patterns: opts.known_bots.list.patterns().len() as u64,
        tally,
    });
    m.write(out)?;
    Ok(m)
}
