//! Out-of-core sessionization.
//!
//! Records are hash-partitioned on the client token into [`SHARDS`] shards.
//! While everything fits in the memory budget the shards stay in memory;
//! past that, every shard is spilled to its own file. Each shard is then
//! sorted by (client token, User-Agent, timestamp, sequence number), in
//! memory when it fits its share of the budget and by an external merge sort
//! otherwise, and cut into sessions as it streams out. Shards are processed in
//! parallel and concatenated in shard order, so the output does not depend on
//! the budget or the thread count.
//!
//! Partitioning on the client token rather than the full user key keeps all
//! of a token's User-Agents together, which the UA-per-IP census relies on.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering as Atomic};

use archlog_core::record::Record;
use archlog_core::session::{session_id, time_order, Timeout, UserKey};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, IoContext, Progress, Result};
use crate::manifest::{Manifest, SessionizeSection};
use crate::records::RecordReader;

pub const SHARDS: usize = 64;
const SPILL_BUF: usize = 16 << 10;

#[derive(Debug, Clone)]
pub struct SortOptions {
    /// Bytes of records held in memory at once, across all threads.
    pub memory_budget: u64,
    pub tmpdir: PathBuf,
}

impl SortOptions {
    pub const DEFAULT_BUDGET: u64 = 1 << 30;
}

/// Tracks the bytes of records held in memory, and the peak.
#[derive(Debug, Default)]
pub struct MemoryMeter {
    current: AtomicU64,
    peak: AtomicU64,
}

impl MemoryMeter {
    pub fn charge(&self, n: u64) {
        let now = self.current.fetch_add(n, Atomic::SeqCst) + n;
        self.peak.fetch_max(now, Atomic::SeqCst);
    }

    pub fn release(&self, n: u64) {
        self.current.fetch_sub(n, Atomic::SeqCst);
    }

    pub fn current(&self) -> u64 {
        self.current.load(Atomic::SeqCst)
    }

    pub fn peak(&self) -> u64 {
        self.peak.load(Atomic::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionizeStats {
    pub requests: u64,
    pub sessions: u64,
    /// Whether records went to disk.
    pub spilled: bool,
    /// Sorted runs written by external sorts.
    pub runs: u64,
    pub peak_bytes: u64,
}

/// Estimated in-memory size of a record.
pub fn accounted_size(r: &Record) -> u64 {
    (std::mem::size_of::<Record>() + r.request.heap_size() + r.session_id.as_ref().map_or(0, String::capacity) + 16)
        as u64
}

pub fn shard_of(client_token: &str) -> usize {
    Sha256::digest(client_token.as_bytes())[0] as usize % SHARDS
}

/// Order within a shard.
fn order(a: &Record, b: &Record) -> Ordering {
    let (x, y) = (&a.request, &b.request);
    x.entry
        .client_token
        .cmp(&y.entry.client_token)
        .then_with(|| x.entry.user_agent_str().cmp(y.entry.user_agent_str()))
        .then_with(|| time_order(x, y))
}

pub fn sessionize_stage(
    input: &Path,
    out: &Path,
    timeout: Timeout,
    opts: &SortOptions,
    meter: &MemoryMeter,
) -> Result<(Manifest, SessionizeStats)> {
    let mut progress = Progress::default();
    run(input, out, timeout, opts, meter, &mut progress).map_err(|e| e.in_stage("sessionize", progress))
}

enum Shard {
    Memory(Vec<Record>, u64),
    Spilled(PathBuf, u64),
    Empty,
}

struct ShardResult {
    path: Option<PathBuf>,
    records: u64,
    sessions: u64,
    runs: u64,
}

fn run(
    input: &Path,
    out: &Path,
    timeout: Timeout,
    opts: &SortOptions,
    meter: &MemoryMeter,
    progress: &mut Progress,
) -> Result<(Manifest, SessionizeStats)> {
    let upstream = Manifest::read_or_empty(input)?;
    std::fs::create_dir_all(&opts.tmpdir).at(&opts.tmpdir)?;
    let tmp = tempfile::Builder::new().prefix("archlog-sessionize-").tempdir_in(&opts.tmpdir).at(&opts.tmpdir)?;
    let budget = opts.memory_budget.max(1);

    // partition
    let mut mem: Vec<Vec<Record>> = (0..SHARDS).map(|_| Vec::new()).collect();
    let mut bytes = [0u64; SHARDS];
    let mut spill: Option<Vec<BufWriter<File>>> = None;
    let spill_path = |i: usize| tmp.path().join(format!("shard-{i:02}.ndjson"));
    let mut reader = RecordReader::open(input)?;
    while let Some(mut r) = reader.next_record()? {
        progress.records_in += 1;
        r.session_id = None;
        r.verdict = None;
        let sh = shard_of(&r.request.entry.client_token);
        let size = accounted_size(&r);
        bytes[sh] += size;
        if spill.is_none() && meter.current() + size > budget {
            let mut writers = Vec::with_capacity(SHARDS);
            for (i, shard) in mem.iter_mut().enumerate() {
                let p = spill_path(i);
                let mut w = BufWriter::with_capacity(SPILL_BUF, File::create(&p).at(&p)?);
                for rec in shard.drain(..) {
                    write_record(&mut w, &rec).at(&p)?;
                    meter.release(accounted_size(&rec));
                }
                *shard = Vec::new();
                writers.push(w);
            }
            spill = Some(writers);
        }
        match spill.as_mut() {
            Some(ws) => write_record(&mut ws[sh], &r).at(&spill_path(sh))?,
            None => {
                meter.charge(size);
                mem[sh].push(r);
            }
        }
    }
    let spilled = spill.is_some();
    let shards: Vec<Shard> = match spill {
        Some(writers) => {
            for (i, mut w) in writers.into_iter().enumerate() {
                w.flush().at(&spill_path(i))?;
            }
            (0..SHARDS)
                .map(|i| if bytes[i] == 0 { Shard::Empty } else { Shard::Spilled(spill_path(i), bytes[i]) })
                .collect()
        }
        None => mem
            .into_iter()
            .enumerate()
            .map(|(i, v)| if v.is_empty() { Shard::Empty } else { Shard::Memory(v, bytes[i]) })
            .collect(),
    };

    // sort and split each shard
    let per_shard = (budget / rayon::current_num_threads().max(1) as u64).max(1);
    let ctx = Ctx { dir: tmp.path(), timeout, per_shard, meter };
    let results: Vec<Result<ShardResult>> =
        shards.into_par_iter().enumerate().map(|(i, s)| ctx.process(i, s)).collect();

    // concatenate
    let mut output = crate::io::Output::create(out).at(out)?;
    let mut stats = SessionizeStats { spilled, ..Default::default() };
    for r in results {
        let r = r?;
        stats.requests += r.records;
        stats.sessions += r.sessions;
        stats.runs += r.runs;
        if let Some(p) = r.path {
            let mut f = File::open(&p).at(&p)?;
            std::io::copy(&mut f, &mut output).at(out)?;
            drop(f);
            let _ = std::fs::remove_file(&p);
        }
        progress.records_out = stats.requests;
    }
    output.finish().at(out)?;
    stats.peak_bytes = meter.peak();

    let mut m = upstream.derive("sessionize", &timeout.secs());
    m.records = stats.requests;
    m.sessionize = Some(SessionizeSection { timeout_secs: timeout.secs(), sessions: stats.sessions, requests: stats.requests });
    m.write(out)?;
    Ok((m, stats))
}

struct Ctx<'a> {
    dir: &'a Path,
    timeout: Timeout,
    per_shard: u64,
    meter: &'a MemoryMeter,
}

impl Ctx<'_> {
    fn process(&self, i: usize, shard: Shard) -> Result<ShardResult> {
        let out_path = self.dir.join(format!("out-{i:02}.ndjson"));
        let mut runs = 0;
        let writer = |p: &Path| -> Result<SessionWriter<BufWriter<File>>> {
            Ok(SessionWriter::new(BufWriter::new(File::create(p).at(p)?), self.timeout))
        };
        let w = match shard {
            Shard::Empty => {
                return Ok(ShardResult { path: None, records: 0, sessions: 0, runs: 0 });
            }
            Shard::Memory(records, bytes) => {
                let w = self.sort_and_split(records, writer(&out_path)?, &out_path)?;
                self.meter.release(bytes);
                w
            }
            Shard::Spilled(path, bytes) if bytes <= self.per_shard => {
                let mut records = Vec::new();
                for r in SpillReader::open(&path)? {
                    records.push(r?);
                }
                self.meter.charge(bytes);
                let w = self.sort_and_split(records, writer(&out_path)?, &out_path)?;
                self.meter.release(bytes);
                let _ = std::fs::remove_file(&path);
                w
            }
            Shard::Spilled(path, _) => {
                let (w, n) = self.external(i, &path, writer(&out_path)?, &out_path)?;
                runs = n;
                let _ = std::fs::remove_file(&path);
                w
            }
        };
        let (records, sessions) = (w.records, w.sessions);
        w.finish().at(&out_path)?;
        Ok(ShardResult { path: Some(out_path), records, sessions, runs })
    }

    fn sort_and_split<W: Write>(
        &self,
        mut records: Vec<Record>,
        mut w: SessionWriter<W>,
        path: &Path,
    ) -> Result<SessionWriter<W>> {
        records.sort_unstable_by(order);
        for r in records {
            w.push(r).at(path)?;
        }
        Ok(w)
    }

    /// External merge sort of one shard file.
    fn external<W: Write>(
        &self,
        shard: usize,
        path: &Path,
        mut w: SessionWriter<W>,
        out_path: &Path,
    ) -> Result<(SessionWriter<W>, u64)> {
        let mut runs: Vec<PathBuf> = Vec::new();
        let mut chunk: Vec<Record> = Vec::new();
        let mut chunk_bytes = 0u64;
        let mut largest = 1u64;
        let mut run_no = 0usize;
        let mut next_run = |runs: &mut Vec<PathBuf>| {
            run_no += 1;
            let p = self.dir.join(format!("run-{shard:02}-{run_no:06}.ndjson"));
            runs.push(p.clone());
            p
        };
        for r in SpillReader::open(path)? {
            let r = r?;
            let size = accounted_size(&r);
            largest = largest.max(size);
            if !chunk.is_empty() && chunk_bytes + size > self.per_shard {
                let p = next_run(&mut runs);
                write_run(&mut chunk, &p)?;
                self.meter.release(chunk_bytes);
                chunk_bytes = 0;
            }
            self.meter.charge(size);
            chunk_bytes += size;
            chunk.push(r);
        }
        if runs.is_empty() {
            let w = self.sort_and_split(chunk, w, out_path)?;
            self.meter.release(chunk_bytes);
            return Ok((w, 0));
        }
        if !chunk.is_empty() {
            let p = next_run(&mut runs);
            write_run(&mut chunk, &p)?;
            self.meter.release(chunk_bytes);
        }
        let written = runs.len() as u64;
        let fan_in = ((self.per_shard / largest) as usize).clamp(2, 512);
        let mut queue: std::collections::VecDeque<PathBuf> = runs.into();
        while queue.len() > fan_in {
            let group: Vec<PathBuf> = queue.drain(..fan_in).collect();
            let p = next_run(&mut Vec::new());
            let mut f = BufWriter::new(File::create(&p).at(&p)?);
            self.merge(&group, |r| write_record(&mut f, &r).at(&p))?;
            f.flush().at(&p)?;
            for g in &group {
                let _ = std::fs::remove_file(g);
            }
            queue.push_back(p);
        }
        let group: Vec<PathBuf> = queue.into();
        self.merge(&group, |r| w.push(r).at(out_path))?;
        for g in &group {
            let _ = std::fs::remove_file(g);
        }
        Ok((w, written))
    }

    fn merge(&self, runs: &[PathBuf], mut emit: impl FnMut(Record) -> Result<()>) -> Result<()> {
        let mut readers = runs.iter().map(|p| SpillReader::open(p)).collect::<Result<Vec<_>>>()?;
        let mut heap = BinaryHeap::with_capacity(readers.len());
        for (i, rd) in readers.iter_mut().enumerate() {
            if let Some(r) = rd.next().transpose()? {
                let size = accounted_size(&r);
                self.meter.charge(size);
                heap.push(Head { rec: r, run: i, size });
            }
        }
        while let Some(Head { rec, run, size }) = heap.pop() {
            self.meter.release(size);
            emit(rec)?;
            if let Some(r) = readers[run].next().transpose()? {
                let size = accounted_size(&r);
                self.meter.charge(size);
                heap.push(Head { rec: r, run, size });
            }
        }
        Ok(())
    }
}

struct Head {
    rec: Record,
    run: usize,
    size: u64,
}

impl PartialEq for Head {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Head {}

impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Head {
    // reversed: BinaryHeap pops the largest
    fn cmp(&self, other: &Self) -> Ordering {
        order(&other.rec, &self.rec).then_with(|| other.run.cmp(&self.run))
    }
}

fn write_record<W: Write>(w: &mut W, r: &Record) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, r)?;
    w.write_all(b"\n")
}

fn write_run(chunk: &mut Vec<Record>, path: &Path) -> Result<()> {
    chunk.sort_unstable_by(order);
    let mut f = BufWriter::new(File::create(path).at(path)?);
    for r in chunk.drain(..) {
        write_record(&mut f, &r).at(path)?;
    }
    f.flush().at(path)
}

struct SpillReader {
    path: PathBuf,
    inner: BufReader<File>,
    line: u64,
    buf: String,
}

impl SpillReader {
    fn open(path: &Path) -> Result<Self> {
        let f = File::open(path).at(path)?;
        Ok(SpillReader { path: path.into(), inner: BufReader::with_capacity(SPILL_BUF, f), line: 0, buf: String::new() })
    }
}

impl Iterator for SpillReader {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        self.buf.clear();
        match self.inner.read_line(&mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.line += 1;
                Some(serde_json::from_str(self.buf.trim_end()).map_err(|e| Error::BadRecord {
                    path: self.path.clone(),
                    line: self.line,
                    message: e.to_string(),
                }))
            }
            Err(e) => Some(Err(Error::Io { path: self.path.clone(), source: e })),
        }
    }
}

/// Assigns session ids to records arriving in user-then-time order and
/// writes them out.
pub struct SessionWriter<W: Write> {
    out: W,
    timeout: u64,
    key: Option<UserKey>,
    last: i64,
    id: String,
    pub records: u64,
    pub sessions: u64,
}

impl<W: Write> SessionWriter<W> {
    pub fn new(out: W, timeout: Timeout) -> Self {
        SessionWriter { out, timeout: timeout.secs(), key: None, last: 0, id: String::new(), records: 0, sessions: 0 }
    }

    pub fn push(&mut self, mut r: Record) -> std::io::Result<()> {
        let ts = r.request.entry.timestamp.epoch_seconds();
        let same_user = self.key.as_ref().is_some_and(|k| k.matches(&r.request));
        if !same_user || i128::from(ts) - i128::from(self.last) > i128::from(self.timeout) {
            if !same_user {
                self.key = Some(UserKey::of(&r.request));
            }
            if let Some(k) = self.key.as_ref() {
                self.id = session_id(k, ts);
            }
            self.sessions += 1;
        }
        self.last = ts;
        self.records += 1;
        r.session_id = Some(self.id.clone());
        write_record(&mut self.out, &r)
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}
