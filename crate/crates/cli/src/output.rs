//! Report envelopes and the files they are written to.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig};
use crate::CliError;

pub const SCHEMA: &str = "coarse-forge-report/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug)]
pub struct Section {
    pub name: &'static str,
    pub pass: bool,
    pub report: Value,
    pub tables: Vec<Table>,
}

impl Section {
    pub fn new(name: &'static str, pass: bool, report: Value, tables: Vec<Table>) -> Self {
        Section {
            name,
            pass,
            report,
            tables,
        }
    }
}

#[derive(Debug, Serialize)]
struct Envelope<'a> {
    schema: &'static str,
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a ExperimentConfig,
    pass: bool,
    report: &'a Value,
}

/// Where a run writes: `(json path, stem for csv files)` per section.
fn locations(cfg: &ExperimentConfig, name: &str) -> (PathBuf, PathBuf) {
    let out = &cfg.out;
    let ext = out.extension().and_then(|e| e.to_str());
    match (cfg.command, ext) {
        (Command::All, _) | (_, None) => {
            let stem = out.join(name);
            (stem.with_extension("json"), stem)
        }
        (_, Some(_)) => {
            let stem = out.with_extension("");
            let json = if ext == Some("json") { out.clone() } else { stem.with_extension("json") };
            (json, stem)
        }
    }
}

fn table_path(stem: &Path, table: &Table, single: bool) -> PathBuf {
    if single {
        stem.with_extension("csv")
    } else {
        let name = format!("{}-{}.csv", stem.file_name().and_then(|s| s.to_str()).unwrap_or("report"), table.name);
        stem.with_file_name(name)
    }
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_table(path: &Path, table: &Table) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Output(e.to_string()))?;
    w.write_record(&table.header).map_err(|e| CliError::Output(e.to_string()))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Result of a run: overall verdict and every file written.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
    pub sections: Vec<(String, bool)>,
}

pub fn write(cfg: &ExperimentConfig, sections: &[Section]) -> Result<Outcome, CliError> {
    let mut files = Vec::new();
    for s in sections {
        let (json_path, stem) = locations(cfg, s.name);
        let env = Envelope {
            schema: SCHEMA,
            tool: "coarse-forge",
            version: VERSION,
            command: s.name,
            config: cfg,
            pass: s.pass,
            report: &s.report,
        };
        write_json(&json_path, &env)?;
        files.push(json_path);
        for t in &s.tables {
            let p = table_path(&stem, t, s.tables.len() == 1);
            write_table(&p, t)?;
            files.push(p);
        }
    }
    let pass = sections.iter().all(|s| s.pass);
    if cfg.command == Command::All {
        let path = cfg.out.join("all.json");
        let summary: Vec<Value> = sections
            .iter()
            .map(|s| json!({ "command": s.name, "pass": s.pass, "report": format!("{}.json", s.name) }))
            .collect();
        let report = json!({ "order": summary });
        let env = Envelope {
            schema: SCHEMA,
            tool: "coarse-forge",
            version: VERSION,
            command: "all",
            config: cfg,
            pass,
            report: &report,
        };
        write_json(&path, &env)?;
        files.push(path);
    }
    Ok(Outcome {
        pass,
        files,
        sections: sections.iter().map(|s| (s.name.to_string(), s.pass)).collect(),
    })
}
