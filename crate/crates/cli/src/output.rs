//! Result files: a `# key=value` header followed by CSV rows.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::CliError;

/// How a command finished, beyond having produced its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// At least one check failed.
    Failed,
    /// At least one training run diverged.
    Diverged,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::Diverged => 3,
        }
    }
}

/// CSV body under construction.
#[derive(Debug, Clone, Default)]
pub struct Table {
    text: String,
    notes: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            text: format!("{}\n", columns.join(",")),
            notes: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: &[&dyn std::fmt::Display]) {
        let line: Vec<String> = cells.iter().map(|c| quote(&c.to_string())).collect();
        let _ = writeln!(self.text, "{}", line.join(","));
    }

    /// Free-text comment written between the header and the rows.
    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Main table plus optional detail tables named `<out stem>.<suffix>.csv`.
#[derive(Debug)]
pub struct Report {
    pub main: Table,
    pub details: Vec<(&'static str, Table)>,
    pub status: Status,
}

impl Report {
    pub fn new(main: Table) -> Self {
        Self {
            main,
            details: Vec::new(),
            status: Status::Ok,
        }
    }
}

pub fn render(cfg: &RunConfig, table: &Table) -> String {
    let mut text = String::new();
    for (k, v) in cfg.header() {
        let _ = writeln!(text, "# {k}={v}");
    }
    for note in &table.notes {
        let _ = writeln!(text, "# {}", note.replace('=', ":"));
    }
    text.push_str(&table.text);
    text
}

pub fn detail_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.with_extension("");
    PathBuf::from(format!("{}.{suffix}.csv", stem.display()))
}

/// Writes the main table to `out` (or stdout) and detail tables next to it.
/// Without `out`, detail tables are skipped.
pub fn write_report(cfg: &RunConfig, report: &Report) -> Result<(), CliError> {
    match &cfg.out {
        Some(out) => {
            std::fs::write(out, render(cfg, &report.main))?;
            for (suffix, table) in &report.details {
                std::fs::write(detail_path(out, suffix), render(cfg, table))?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(render(cfg, &report.main).as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
