//! The intermediate record stream: one JSON object per line, gzip when the
//! file name ends in `.gz`.

use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use archlog_core::record::Record;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, IoContext, Result};
use crate::io::{open_input, Output};

pub const BATCH: usize = 8192;

/// Reads records in batches, decoding each batch in parallel.
pub struct RecordReader {
    path: PathBuf,
    inner: Box<dyn BufRead + Send>,
    line: u64,
    batch: usize,
    buf: VecDeque<Record>,
    done: bool,
}

impl RecordReader {
    pub fn open(path: &Path) -> Result<Self> {
        Self::with_batch(path, BATCH)
    }

    pub fn with_batch(path: &Path, batch: usize) -> Result<Self> {
        Ok(RecordReader {
            path: path.to_path_buf(),
            inner: open_input(path).at(path)?,
            line: 0,
            batch: batch.max(1),
            buf: VecDeque::new(),
            done: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Lines consumed from the file so far.
    pub fn lines_read(&self) -> u64 {
        self.line
    }

    fn fill(&mut self) -> Result<()> {
        if self.done || !self.buf.is_empty() {
            return Ok(());
        }
        let mut lines = Vec::with_capacity(self.batch);
        while lines.len() < self.batch {
            let mut s = String::new();
            let n = self.inner.read_line(&mut s).at(&self.path)?;
            if n == 0 {
                self.done = true;
                break;
            }
            self.line += 1;
            let t = s.trim_end_matches(['\n', '\r']);
            if t.is_empty() {
                continue;
            }
            if t.len() != s.len() {
                s.truncate(t.len());
            }
            lines.push((self.line, s));
        }
        let decoded: Vec<Result<Record>> = lines
            .par_iter()
            .map(|(n, s)| {
                serde_json::from_str(s).map_err(|e| Error::BadRecord {
                    path: self.path.clone(),
                    line: *n,
                    message: e.to_string(),
                })
            })
            .collect();
        for d in decoded {
            self.buf.push_back(d?);
        }
        Ok(())
    }

    pub fn peek(&mut self) -> Result<Option<&Record>> {
        self.fill()?;
        Ok(self.buf.front())
    }

    pub fn next_record(&mut self) -> Result<Option<Record>> {
        self.fill()?;
        Ok(self.buf.pop_front())
    }
}

impl Iterator for RecordReader {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

/// Writes JSON lines; batches are encoded in parallel.
pub struct JsonLines {
    path: PathBuf,
    out: Output,
    count: u64,
    pending: Vec<u8>,
}

impl JsonLines {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(JsonLines { path: path.to_path_buf(), out: Output::create(path).at(path)?, count: 0, pending: Vec::new() })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn write<T: Serialize>(&mut self, item: &T) -> Result<()> {
        serde_json::to_writer(&mut self.pending, item).map_err(|e| Error::BadInput {
            path: self.path.clone(),
            message: e.to_string(),
        })?;
        self.pending.push(b'\n');
        self.count += 1;
        if self.pending.len() >= 1 << 20 {
            self.flush_pending()?;
        }
        Ok(())
    }

    pub fn write_batch<T: Serialize + Sync>(&mut self, items: &[T]) -> Result<()> {
        let encoded: Vec<serde_json::Result<Vec<u8>>> = items.par_iter().map(serde_json::to_vec).collect();
        for e in encoded {
            let e = e.map_err(|e| Error::BadInput { path: self.path.clone(), message: e.to_string() })?;
            self.pending.extend_from_slice(&e);
            self.pending.push(b'\n');
        }
        self.count += items.len() as u64;
        self.flush_pending()
    }

    fn flush_pending(&mut self) -> Result<()> {
        self.out.write_all(&self.pending).at(&self.path)?;
        self.pending.clear();
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.flush_pending()?;
        let JsonLines { path, out, count, .. } = self;
        out.finish().at(&path)?;
        Ok(count)
    }
}
