//! Result tables, CSV files and the run manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub description: String,
}

impl Column {
    pub fn new(name: &str, unit: &str, description: &str) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            description: description.into(),
        }
    }
}

/// One CSV file worth of results.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub stem: String,
    pub columns: Vec<Column>,
    pub meta: Vec<(String, String)>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(stem: &str, columns: Vec<Column>) -> Self {
        Self {
            stem: stem.into(),
            columns,
            meta: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.stem)
    }

    /// CSV text: `#` metadata, one header row, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut o = String::new();
        o.push_str(&format!("# rydxpm {}\n", env!("CARGO_PKG_VERSION")));
        for (k, v) in &self.meta {
            o.push_str(&format!("# {k}: {v}\n"));
        }
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        o.push_str(&header.join(","));
        o.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.11e}")).collect();
            o.push_str(&cells.join(","));
            o.push('\n');
        }
        o
    }
}

/// Severity of a run, ordered from best to worst.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "reason", rename_all = "snake_case")]
pub enum Status {
    Clean,
    AccuracyFailure(String),
    PhysicsAbort(String),
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Clean => 0,
            Status::PhysicsAbort(_) => 3,
            Status::AccuracyFailure(_) => 4,
        }
    }

    pub fn worst(self, other: Status) -> Status {
        self.max(other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub converged: bool,
    pub detail: String,
}

/// Everything a scenario produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub status: Status,
    pub checks: Vec<Check>,
    pub messages: Vec<String>,
}

impl RunOutput {
    pub fn new() -> Self {
        Self {
            tables: Vec::new(),
            status: Status::Clean,
            checks: Vec::new(),
            messages: Vec::new(),
        }
    }

    pub fn fail(&mut self, status: Status) {
        if let Status::AccuracyFailure(m) | Status::PhysicsAbort(m) = &status {
            self.messages.push(m.clone());
        }
        self.status = std::mem::replace(&mut self.status, Status::Clean).worst(status);
    }

    pub fn table(&self, stem: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.stem == stem)
    }
}

impl Default for RunOutput {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    /// Data rows for CSV files, lines for the config echo.
    pub rows: usize,
    pub columns: Vec<Column>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub scenario: String,
    pub preset: Option<String>,
    pub status: Status,
    pub exit_code: i32,
    pub wall_time_s: f64,
    pub flags: Vec<String>,
    pub checks: Vec<Check>,
    pub messages: Vec<String>,
    pub files: Vec<FileEntry>,
    /// Resolved configuration in SI; feeding it back reproduces the data.
    pub config: String,
}

pub struct ManifestInfo<'a> {
    pub command: &'a str,
    pub scenario: &'a str,
    pub preset: Option<&'a str>,
    pub flags: Vec<String>,
    pub config_echo: String,
    pub wall_time_s: f64,
}

/// Writes every table plus `manifest.json` into `dir`; returns the paths.
pub fn write_outputs(dir: &Path, out: &RunOutput, info: ManifestInfo<'_>) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let mut files = Vec::new();
    for t in &out.tables {
        let path = dir.join(t.file_name());
        fs::write(&path, t.to_csv())?;
        files.push(FileEntry {
            path: t.file_name(),
            rows: t.rows.len(),
            columns: t.columns.clone(),
        });
        paths.push(path);
    }
    let config_name = "config.echo";
    fs::write(dir.join(config_name), &info.config_echo)?;
    files.push(FileEntry {
        path: config_name.into(),
        rows: info.config_echo.lines().count(),
        columns: Vec::new(),
    });
    paths.push(dir.join(config_name));
    let manifest = Manifest {
        tool: "rydxpm",
        version: env!("CARGO_PKG_VERSION"),
        command: info.command.into(),
        scenario: info.scenario.into(),
        preset: info.preset.map(str::to_string),
        status: out.status.clone(),
        exit_code: out.status.exit_code(),
        wall_time_s: info.wall_time_s,
        flags: info.flags,
        checks: out.checks.clone(),
        messages: out.messages.clone(),
        files,
        config: info.config_echo,
    };
    let path = dir.join("manifest.json");
    let mut f = fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut f, &manifest).map_err(io::Error::other)?;
    f.write_all(b"\n")?;
    paths.push(path);
    Ok(paths)
}
