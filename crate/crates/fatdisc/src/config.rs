//! Run configuration: a flat key-value file plus command-line overrides.
//!
//! Files hold one `key = value` pair per line, with `#` comments and blank
//! lines ignored. Later assignments win, command-line `--set key=value`
//! overrides win over the file. Every typed accessor reports the offending
//! file and line on a bad value, and `resolved` renders the active settings
//! as sorted deterministic text for embedding in reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const OVERRIDE_SOURCE: &str = "<set>";

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    source: String,
    /// 1-based line for file entries, 0 for overrides.
    line: usize,
}

/// Resolved key-value configuration.
#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
}

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    /// Parse a config file and merge it over the current entries.
    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        let file = path.display().to_string();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.split_once('#') {
                Some((head, _)) => head,
                None => raw,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| Error::Config {
                file: file.clone(),
                line,
                msg: format!("expected 'key = value', got '{stripped}'"),
            })?;
            let key = key.trim();
            if key.is_empty() || !is_key(key) {
                return Err(Error::Config {
                    file: file.clone(),
                    line,
                    msg: format!("bad key '{key}': use letters, digits, '_', '.', '-'"),
                });
            }
            self.entries.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    source: file.clone(),
                    line,
                },
            );
        }
        Ok(())
    }

    /// Apply a single `key=value` override from the command line.
    pub fn apply_set(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec.split_once('=').ok_or_else(|| Error::Config {
            file: OVERRIDE_SOURCE.to_string(),
            line: 0,
            msg: format!("override '{spec}' is not of the form key=value"),
        })?;
        let key = key.trim();
        if key.is_empty() || !is_key(key) {
            return Err(Error::Config {
                file: OVERRIDE_SOURCE.to_string(),
                line: 0,
                msg: format!("bad key '{key}' in override '{spec}'"),
            });
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                source: OVERRIDE_SOURCE.to_string(),
                line: 0,
            },
        );
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    /// Value of `key`, or an error naming the keys that are available.
    pub fn require(&self, key: &str) -> Result<&str> {
        self.get_str(key).ok_or_else(|| {
            Error::Domain(format!(
                "missing required config key '{key}' (have: {})",
                self.keys().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        self.parse_with(key, default, "a real number")
    }

    pub fn get_u32(&self, key: &str, default: u32) -> Result<u32> {
        self.parse_with(key, default, "an unsigned integer")
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        self.parse_with(key, default, "an unsigned integer")
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        self.parse_with(key, default, "an unsigned integer")
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(entry) => match entry.value.as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                other => Err(self.value_error(key, entry, other, "a boolean (true/false)")),
            },
        }
    }

    /// Comma or whitespace separated list of unsigned integers.
    pub fn get_u32_list(&self, key: &str, default: &[u32]) -> Result<Vec<u32>> {
        match self.entries.get(key) {
            None => Ok(default.to_vec()),
            Some(entry) => entry
                .value
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().map_err(|_| {
                        self.value_error(key, entry, s, "a list of unsigned integers")
                    })
                })
                .collect(),
        }
    }

    fn parse_with<T: std::str::FromStr>(&self, key: &str, default: T, what: &str) -> Result<T> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(entry) => entry
                .value
                .parse()
                .map_err(|_| self.value_error(key, entry, &entry.value, what)),
        }
    }

    fn value_error(&self, key: &str, entry: &Entry, got: &str, want: &str) -> Error {
        Error::Config {
            file: entry.source.clone(),
            line: entry.line,
            msg: format!("key '{key}': expected {want}, got '{got}'"),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    /// Sorted `key = value` rendering of the active configuration.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        for (key, entry) in &self.entries {
            let _ = writeln!(out, "{key} = {}", entry.value);
        }
        out
    }
}

fn is_key(key: &str) -> bool {
    key.chars()
        .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, body: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!("fatdisc-config-{name}-{}", std::process::id()));
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn files_parse_with_comments_and_defaults() {
        let path = write_temp(
            "basic",
            "# run setup\nresolution = 32\n\nseed = 7 # rng\nmodel = holomorphic_contact\namplitude = 1e-3\n",
        );
        let mut cfg = Config::new();
        cfg.merge_file(&path).unwrap();
        assert_eq!(cfg.get_u32("resolution", 16).unwrap(), 32);
        assert_eq!(cfg.get_u64("seed", 0).unwrap(), 7);
        assert_eq!(cfg.require("model").unwrap(), "holomorphic_contact");
        assert_eq!(cfg.get_f64("amplitude", 0.0).unwrap(), 1e-3);
        assert_eq!(cfg.get_u32("missing", 11).unwrap(), 11);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn overrides_win_over_the_file() {
        let path = write_temp("override", "resolution = 32\n");
        let mut cfg = Config::new();
        cfg.merge_file(&path).unwrap();
        cfg.apply_set("resolution=64").unwrap();
        assert_eq!(cfg.get_u32("resolution", 0).unwrap(), 64);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn bad_values_cite_the_file_and_line() {
        let path = write_temp("badvalue", "# header\n\nresolution = soon\n");
        let mut cfg = Config::new();
        cfg.merge_file(&path).unwrap();
        match cfg.get_u32("resolution", 0).unwrap_err() {
            Error::Config { line, msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("resolution"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let path = write_temp("malformed", "resolution 32\n");
        let mut cfg = Config::new();
        match cfg.merge_file(&path).unwrap_err() {
            Error::Config { line, msg, .. } => {
                assert_eq!(line, 1);
                assert!(msg.contains("key = value"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(cfg.apply_set("no-equals-here").is_err());
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn resolved_text_is_sorted_and_stable() {
        let mut cfg = Config::new();
        cfg.apply_set("zeta=1").unwrap();
        cfg.apply_set("alpha=2").unwrap();
        cfg.apply_set("mid.key=three").unwrap();
        assert_eq!(cfg.resolved(), "alpha = 2\nmid.key = three\nzeta = 1\n");
        assert_eq!(cfg.resolved(), cfg.clone().resolved());
    }

    #[test]
    fn u32_lists_accept_commas_and_spaces() {
        let mut cfg = Config::new();
        cfg.apply_set("resolutions=16, 32 64").unwrap();
        assert_eq!(cfg.get_u32_list("resolutions", &[]).unwrap(), vec![16, 32, 64]);
        assert_eq!(cfg.get_u32_list("other", &[8]).unwrap(), vec![8]);
    }
}
