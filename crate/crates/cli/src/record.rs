//! JSON Lines run records.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use postlab::certify::{Certificate, ProbeResult, Status, WitnessConfig};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub certificates: Vec<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessConfig>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunRecord {
    pub fn new(command: &str, parameters: serde_json::Value, started: DateTime<Utc>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            parameters,
            certificates: Vec::new(),
            probe: None,
            witness: None,
            started_at: timestamp(started),
            finished_at: timestamp(Utc::now()),
        }
    }
}

/// Single appender for a results file; every record is one line.
pub struct Appender {
    file: File,
}

impl Appender {
    pub fn open(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file })
    }

    pub fn append(&mut self, record: &RunRecord) -> io::Result<()> {
        let mut line = serde_json::to_string(record).map_err(io::Error::other)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())
    }
}

pub fn read_records(path: &Path) -> io::Result<Vec<RunRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RunRecord = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)))?;
        if rec.schema_version != SCHEMA_VERSION {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("line {}: unsupported schema_version {}", i + 1, rec.schema_version),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

const REPORT_HEADER: [&str; 11] = ["command", "m", "d", "t", "strategy", "prime", "seed", "attempts", "h0", "h1", "status"];

fn status_label(s: &Status) -> String {
    match s {
        Status::MaximalRankCertified => "certified".into(),
        Status::DeficitObserved { h0, h1 } => format!("deficit ({h0},{h1})"),
        Status::Unconfirmed => "unconfirmed".into(),
    }
}

fn report_rows(records: &[RunRecord]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in records {
        for c in &r.certificates {
            rows.push(vec![
                r.command.clone(),
                c.m.to_string(),
                c.d.to_string(),
                c.t.to_string(),
                c.strategy.to_string(),
                c.prime.to_string(),
                c.seed.to_string(),
                c.attempts.to_string(),
                c.h0.to_string(),
                c.h1.to_string(),
                status_label(&c.status),
            ]);
        }
        if let Some(w) = &r.witness {
            let verdict = if w.passed() { "witness passed" } else { "witness failed" };
            rows.push(vec![
                r.command.clone(),
                w.m.to_string(),
                String::new(),
                w.t.to_string(),
                w.kind.to_string(),
                w.prime.to_string(),
                w.seed.to_string(),
                w.attempts.to_string(),
                String::new(),
                String::new(),
                verdict.into(),
            ]);
        }
    }
    rows
}

pub fn render_markdown(records: &[RunRecord]) -> String {
    let mut out = format!("| {} |\n|{}\n", REPORT_HEADER.join(" | "), "---|".repeat(REPORT_HEADER.len()));
    for row in report_rows(records) {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out
}

pub fn render_csv(records: &[RunRecord]) -> String {
    let mut out = format!("{}\n", REPORT_HEADER.join(","));
    for row in report_rows(records) {
        let quoted: Vec<String> = row
            .into_iter()
            .map(|f| if f.contains([',', '"']) { format!("\"{}\"", f.replace('"', "\"\"")) } else { f })
            .collect();
        out.push_str(&quoted.join(","));
        out.push('\n');
    }
    out
}
