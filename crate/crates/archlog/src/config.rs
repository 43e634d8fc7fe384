//! The TOML config file. Keys mirror the command-line flags; a flag given on
//! the command line wins over the same key in the file.

use std::path::{Path, PathBuf};

use archlog_core::ratio::Decimal;
use archlog_core::FormatHint;
use chrono::NaiveDate;
use serde::Deserialize;

use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub input: Option<Vec<PathBuf>>,
    pub out: Option<PathBuf>,
    pub format: Option<FormatHint>,
    pub profile: Option<String>,
    pub errors_out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub tmpdir: Option<PathBuf>,
    pub memory_budget: Option<String>,
    pub timeout_minutes: Option<u64>,
    pub known_bots: Option<PathBuf>,
    pub bs_threshold: Option<Decimal>,
    pub ih_threshold: Option<Decimal>,
    pub ua_ip_threshold: Option<u32>,
    pub verdicts: Option<PathBuf>,
    pub dive_window_hours: Option<u64>,
    pub labels: Option<PathBuf>,
    #[serde(default, deserialize_with = "date")]
    pub reference_date: Option<NaiveDate>,
    pub year_mode: Option<String>,
    pub emit: Option<Vec<String>>,
    pub resume: Option<bool>,
    pub gzip_intermediate: Option<bool>,
}

/// Accepts a bare TOML date or a quoted `YYYY-MM-DD` string.
fn date<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<NaiveDate>, D::Error> {
    let text = match toml::Value::deserialize(d)? {
        toml::Value::String(s) => s,
        toml::Value::Datetime(dt) => dt.to_string(),
        other => return Err(serde::de::Error::custom(format!("expected a date, found {}", other.type_str()))),
    };
    NaiveDate::parse_from_str(&text, "%Y-%m-%d").map(Some).map_err(serde::de::Error::custom)
}

impl ConfigFile {
    /// Loads a config file. Relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).at(path)?;
        let mut c: ConfigFile =
            toml::from_str(&text).map_err(|e| Error::BadInput { path: path.into(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(v) = c.input.as_mut() {
            v.iter_mut().for_each(fix);
        }
        for p in [
            &mut c.out,
            &mut c.errors_out,
            &mut c.tmpdir,
            &mut c.known_bots,
            &mut c.verdicts,
            &mut c.labels,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        Ok(c)
    }
}

/// Parses sizes such as `512MiB`, `2GB` or a plain byte count.
pub fn parse_size(s: &str) -> Result<u64> {
    let b: bytesize::ByteSize =
        s.trim().parse().map_err(|e: String| Error::Config(format!("memory budget `{s}`: {e}")))?;
    if b.as_u64() == 0 {
        return Err(Error::Config("memory budget must be positive".into()));
    }
    Ok(b.as_u64())
}

/// Temporary directory: flag, then config, then `ARCHLOG_TMPDIR`, then the
/// system default.
pub fn resolve_tmpdir(flag: Option<PathBuf>, config: Option<PathBuf>) -> PathBuf {
    flag.or(config)
        .or_else(|| std::env::var_os("ARCHLOG_TMPDIR").filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(std::env::temp_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("1024").unwrap(), 1024);
        assert_eq!(parse_size("64KiB").unwrap(), 65_536);
        assert_eq!(parse_size("2 MiB").unwrap(), 2 << 20);
        assert_eq!(parse_size("1GB").unwrap(), 1_000_000_000);
        assert!(parse_size("0").is_err());
        assert!(parse_size("lots").is_err());
    }

    #[test]
    fn config_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(
            &p,
            "input = [\"a.log\", \"/abs/b.log\"]\nformat = \"clf-extended\"\nbs-threshold = 0.25\nih-threshold = \"0.1\"\nua-ip-threshold = 5\nreference-date = 2019-02-07\nyear-mode = \"elapsed\"\nemit = [\"json\"]\n",
        )
        .unwrap();
        let c = ConfigFile::load(&p).unwrap();
        assert_eq!(c.input.unwrap(), vec![dir.path().join("a.log"), PathBuf::from("/abs/b.log")]);
        assert_eq!(c.format, Some(FormatHint::ClfExtended));
        assert_eq!(c.bs_threshold, Some(Decimal::from_parts(25, 100)));
        assert_eq!(c.ih_threshold, Some(Decimal::from_parts(1, 10)));
        assert_eq!(c.reference_date, NaiveDate::from_ymd_opt(2019, 2, 7));
        std::fs::write(&p, "reference-date = \"2020-01-31\"\n").unwrap();
        assert_eq!(ConfigFile::load(&p).unwrap().reference_date, NaiveDate::from_ymd_opt(2020, 1, 31));
        std::fs::write(&p, "bogus = 1\n").unwrap();
        assert!(ConfigFile::load(&p).is_err());
    }

    #[test]
    fn documented_example_loads() {
        let doc = include_str!("../../../docs/FORMATS.md");
        let start = doc.find("```toml\n").unwrap() + 8;
        let block = &doc[start..start + doc[start..].find("```").unwrap()];
        let c: ConfigFile = toml::from_str(block).unwrap();
        assert_eq!(c.timeout_minutes, Some(10));
        assert_eq!(parse_size(c.memory_budget.as_deref().unwrap()).unwrap(), 512 << 20);
        for e in c.emit.unwrap() {
            e.parse::<crate::report::Emit>().unwrap();
        }
        c.profile.unwrap().parse::<archlog_core::ArchiveProfile>().unwrap();
        c.year_mode.unwrap().parse::<archlog_core::temporal::YearMode>().unwrap();
    }

    #[test]
    fn tmpdir_precedence() {
        let a = PathBuf::from("/a");
        let b = PathBuf::from("/b");
        assert_eq!(resolve_tmpdir(Some(a.clone()), Some(b.clone())), a);
        assert_eq!(resolve_tmpdir(None, Some(b.clone())), b);
    }
}
