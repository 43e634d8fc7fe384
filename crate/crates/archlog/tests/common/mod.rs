#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use archlog::records::RecordReader;
use chrono::{Duration, NaiveDate, NaiveDateTime};

pub const HUMAN_UA: &str = "Mozilla/5.0 (X11; Ubuntu; Linux x86_64; rv:48.0) Gecko/20100101 Firefox/48.0";

pub fn base_time() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2019, 2, 7).unwrap().and_hms_opt(9, 0, 0).unwrap()
}

/// A Combined Log Format line for a Wayback request `secs` after 09:00.
pub fn line(token: &str, ua: &str, secs: i64, method: &str, path: &str, status: u16) -> String {
    let t = base_time() + Duration::seconds(secs);
    format!(
        "{token} - - [{}] \"{method} {path} HTTP/1.1\" {status} 512 \"-\" \"{ua}\"",
        t.format("%d/%b/%Y:%H:%M:%S +0000")
    )
}

pub fn page(uri: &str, stamp: &str) -> String {
    format!("/web/{stamp}/http://{uri}")
}

pub fn write_lines(path: &Path, lines: &[String]) {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).unwrap();
}

/// Session id to the input sequence numbers of its records, in file order.
pub fn sessions_of(path: &Path) -> BTreeMap<String, Vec<u64>> {
    let mut out: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut r = RecordReader::open(path).unwrap();
    while let Some(rec) = r.next_record().unwrap() {
        out.entry(rec.session_id.clone().expect("session id")).or_default().push(rec.request.seq);
    }
    out
}

pub fn read_jsonl(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Every file in `dir` (not recursive), by name.
pub fn files_in(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p: PathBuf = e.unwrap().path();
        if p.is_file() {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
        }
    }
    out
}
