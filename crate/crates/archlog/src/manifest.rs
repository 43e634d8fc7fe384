//! Sidecar manifests.
//!
//! Every stage output `X` is accompanied by `X.meta.json`, which carries the
//! counts the report needs from earlier stages and a fingerprint of the
//! settings that produced `X`. The fingerprint chains: each stage hashes its
//! parent's fingerprint together with its own settings, so a matching
//! fingerprint means the whole upstream computation matches.

use std::path::{Path, PathBuf};

use archlog_core::bot::{BotTally, Thresholds};
use archlog_core::features::FeatureStats;
use archlog_core::report::{InputDigest, ParseCounts};
use archlog_core::{ArchiveProfile, FormatHint};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::io::{sha256_bytes, write_file};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseSection {
    pub inputs: Vec<InputDigest>,
    pub format: FormatHint,
    pub profile: ArchiveProfile,
    pub counts: ParseCounts,
    pub features: FeatureStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanSection {
    pub input: u64,
    pub kept: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionizeSection {
    pub timeout_secs: u64,
    pub sessions: u64,
    pub requests: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectSection {
    pub thresholds: Thresholds,
    pub known_bots_sha256: String,
    pub known_bot_patterns: u64,
    pub tally: BotTally,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    /// The stage that wrote the file this manifest describes.
    pub stage: String,
    pub fingerprint: String,
    /// Fingerprint of the stage input; empty for parse.
    pub parent: String,
    /// Records (or entries) in the file.
    pub records: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse: Option<ParseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean1: Option<CleanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessionize: Option<SessionizeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detect: Option<DetectSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean2: Option<CleanSection>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Hash of a parent fingerprint, a stage name and the stage settings.
pub fn fingerprint<S: Serialize>(parent: &str, stage: &str, settings: &S) -> String {
    let body = serde_json::to_string(settings).unwrap_or_default();
    sha256_bytes(format!("{parent}\n{stage}\n{body}").as_bytes())
}

impl Manifest {
    /// The manifest of a stage output derived from this one.
    pub fn derive<S: Serialize>(&self, stage: &str, settings: &S) -> Manifest {
        let mut m = self.clone();
        m.tool_version = TOOL_VERSION.to_string();
        m.stage = stage.to_string();
        m.parent = self.fingerprint.clone();
        m.fingerprint = fingerprint(&self.fingerprint, stage, settings);
        m
    }

    pub fn read(data_path: &Path) -> Result<Manifest> {
        let p = sidecar_path(data_path);
        let text = std::fs::read_to_string(&p).at(&p)?;
        serde_json::from_str(&text).map_err(|e| Error::BadInput { path: p, message: e.to_string() })
    }

    /// Reads the sidecar if present. A missing one gives an empty manifest
    /// and a warning; the report then lacks upstream counts.
    pub fn read_or_empty(data_path: &Path) -> Result<Manifest> {
        if sidecar_path(data_path).exists() {
            Manifest::read(data_path)
        } else {
            log::warn!("{}: no sidecar manifest, upstream counts unknown", data_path.display());
            Ok(Manifest { fingerprint: String::new(), ..Manifest::default() })
        }
    }

    /// Writes the sidecar. Call only after the data file is complete.
    pub fn write(&self, data_path: &Path) -> Result<()> {
        let p = sidecar_path(data_path);
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::BadInput {
            path: p.clone(),
            message: e.to_string(),
        })?;
        text.push('\n');
        write_file(&p, text.as_bytes()).at(&p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprints_chain() {
        let root = Manifest { fingerprint: "a".into(), ..Default::default() };
        let x = root.derive("clean1", &1u32);
        let y = root.derive("clean1", &2u32);
        assert_ne!(x.fingerprint, y.fingerprint);
        assert_eq!(x.parent, "a");
        assert_eq!(x, root.derive("clean1", &1u32));
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("s1.ndjson.gz");
        assert_eq!(sidecar_path(&data), dir.path().join("s1.ndjson.gz.meta.json"));
        let m = Manifest {
            stage: "clean1".into(),
            clean1: Some(CleanSection { input: 3, kept: 2 }),
            ..Default::default()
        };
        m.write(&data).unwrap();
        assert_eq!(Manifest::read(&data).unwrap(), m);
        assert!(Manifest::read(&dir.path().join("none")).is_err());
        assert_eq!(Manifest::read_or_empty(&dir.path().join("none")).unwrap().stage, "");
    }
}
