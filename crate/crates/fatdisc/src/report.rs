//! Plain-text run reports.
//!
//! Reports are deterministic: the same configuration and seed produce
//! byte-identical text, so regression diffs stay quiet. Anything
//! time-dependent (wall clock, duration) goes to a `.meta` sidecar next to
//! the report instead of into it. Writes go through a temp-and-rename.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::Config;
use crate::disc::atomic_write;
use crate::error::Result;

/// Deterministic report assembler.
#[derive(Debug, Clone)]
pub struct ReportBuilder {
    body: String,
}

impl ReportBuilder {
    pub fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(body, "# {title}");
        let _ = writeln!(body);
        ReportBuilder { body }
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.body, "{key}: {value}");
        self
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        let _ = writeln!(self.body);
        let _ = writeln!(self.body, "## {name}");
        self
    }

    pub fn line(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.body, "{text}");
        self
    }

    pub fn blank(&mut self) -> &mut Self {
        let _ = writeln!(self.body);
        self
    }

    /// Append a column-aligned table. Cells are left-aligned except those
    /// that parse as numbers, which align right.
    pub fn table(&mut self, headers: &[&str], rows: &[Vec<String>]) -> &mut Self {
        let cols = headers.len();
        let mut width = headers.iter().map(|h| h.chars().count()).collect::<Vec<_>>();
        for row in rows {
            for (c, cell) in row.iter().enumerate().take(cols) {
                width[c] = width[c].max(cell.chars().count());
            }
        }
        let mut render = |cells: &[String]| {
            let mut line = String::new();
            for (c, cell) in cells.iter().enumerate().take(cols) {
                if c > 0 {
                    line.push_str("  ");
                }
                if cell.parse::<f64>().is_ok() {
                    let _ = write!(line, "{cell:>w$}", w = width[c]);
                } else {
                    let _ = write!(line, "{cell:<w$}", w = width[c]);
                }
            }
            let _ = writeln!(self.body, "{}", line.trim_end());
        };
        render(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
        render(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
        for row in rows {
            render(row);
        }
        self
    }

    /// Final text with the resolved configuration and code version embedded.
    pub fn finish(mut self, config: &Config) -> String {
        let _ = writeln!(self.body);
        let _ = writeln!(self.body, "## configuration");
        let resolved = config.resolved();
        if resolved.is_empty() {
            let _ = writeln!(self.body, "(defaults)");
        } else {
            self.body.push_str(&resolved);
        }
        let _ = writeln!(self.body);
        let _ = writeln!(
            self.body,
            "version: {} {}",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        );
        self.body
    }
}

/// Write a finished report atomically and drop a `.meta` sidecar holding
/// the wall-clock timestamp, keeping the report itself reproducible.
pub fn write_report(path: &Path, text: &str) -> Result<()> {
    atomic_write(path, text)?;
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut meta = path.as_os_str().to_owned();
    meta.push(".meta");
    atomic_write(
        Path::new(&meta),
        &format!("written_unix_seconds = {stamp}\n"),
    )
}
