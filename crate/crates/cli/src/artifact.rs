use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Plot-ready rows that accompany a result in CSV mode.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// What a subcommand hands back before it is wrapped for output.
pub struct Report {
    pub pass: bool,
    pub result: Value,
    pub table: Table,
}

#[derive(Debug, Serialize)]
pub struct Artifact<'a> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub arguments: Value,
    pub wall_seconds: f64,
    pub pass: bool,
    pub result: &'a Value,
}

fn csv_text(artifact: &Artifact<'_>, table: &Table) -> Result<String, String> {
    let mut out = Vec::new();
    // Provenance as comment lines so the rows stay loadable as plain CSV.
    for (key, value) in [
        ("schema_version", artifact.schema_version.to_string()),
        ("tool", format!("{} {}", artifact.tool, artifact.version)),
        ("command", artifact.command.to_string()),
        ("config", serde_json::to_string(artifact.config).map_err(|e| e.to_string())?),
        ("arguments", artifact.arguments.to_string()),
        ("wall_seconds", format!("{:.6}", artifact.wall_seconds)),
        ("pass", artifact.pass.to_string()),
    ] {
        writeln!(out, "# {key}: {value}").map_err(|e| e.to_string())?;
    }
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(&table.headers).map_err(|e| e.to_string())?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())?;
    drop(w);
    String::from_utf8(out).map_err(|e| e.to_string())
}

/// Writes the artifact to `out` (one file per format) or to stdout.
pub fn emit(artifact: &Artifact<'_>, table: &Table, config: &RunConfig, extra: &[(String, String)]) -> Result<(), String> {
    let json = serde_json::to_string_pretty(artifact).map_err(|e| e.to_string())?;
    let stem = artifact.command;
    match &config.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            write_file(&dir.join(format!("{stem}.json")), &json)?;
            if config.format == Format::Csv {
                write_file(&dir.join(format!("{stem}.csv")), &csv_text(artifact, table)?)?;
            }
            for (name, body) in extra {
                write_file(&dir.join(name), body)?;
            }
            let verdict = if artifact.pass { "pass" } else { "FAIL" };
            println!("{stem}: {verdict} ({:.3}s), artifacts in {}", artifact.wall_seconds, dir.display());
        }
        None => match config.format {
            Format::Json => println!("{json}"),
            Format::Csv => print!("{}", csv_text(artifact, table)?),
        },
    }
    Ok(())
}

fn write_file(path: &Path, body: &str) -> Result<(), String> {
    fs::write(path, body).map_err(|e| format!("{}: {e}", path.display()))
}
