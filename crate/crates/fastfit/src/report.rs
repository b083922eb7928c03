//! JSON-lines run reports.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One vocoded file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileRecord {
    pub input: String,
    pub output: String,
    pub frames: usize,
    pub duration_s: f64,
    pub wall_time_s: f64,
    pub rtf: f64,
    pub forward_calls: usize,
}

impl FileRecord {
    pub fn new(input: String, output: String, frames: usize, duration_s: f64, wall_time_s: f64, forward_calls: usize) -> Self {
        FileRecord {
            input,
            output,
            frames,
            duration_s,
            wall_time_s,
            rtf: rtf(duration_s, wall_time_s),
            forward_calls,
        }
    }
}

/// Audio seconds produced per second of wall time.
pub fn rtf(duration_s: f64, wall_time_s: f64) -> f64 {
    duration_s / wall_time_s.max(1e-9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregate {
    pub files: usize,
    pub mean_rtf: f64,
    pub params: usize,
    pub encoder_kind: String,
    #[serde(rename = "T")]
    pub iterations: usize,
}

/// One line of a report stream, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportLine {
    File(FileRecord),
    Aggregate(Aggregate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub records: Vec<FileRecord>,
    pub aggregate: Aggregate,
}

impl RunReport {
    pub fn new(records: Vec<FileRecord>, params: usize, encoder_kind: &str, iterations: usize) -> Self {
        let mean_rtf = if records.is_empty() {
            0.0
        } else {
            records.iter().map(|r| r.rtf).sum::<f64>() / records.len() as f64
        };
        RunReport {
            aggregate: Aggregate {
                files: records.len(),
                mean_rtf,
                params,
                encoder_kind: encoder_kind.into(),
                iterations,
            },
            records,
        }
    }

    /// Internal consistency: each rtf is duration over wall time and the
    /// aggregate summarizes the records.
    pub fn check(&self) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        for r in &self.records {
            if !close(r.rtf, rtf(r.duration_s, r.wall_time_s)) {
                return Err(Error::Header(format!("record for {} has inconsistent rtf", r.input)));
            }
        }
        let again = RunReport::new(
            self.records.clone(),
            self.aggregate.params,
            &self.aggregate.encoder_kind,
            self.aggregate.iterations,
        );
        if again.aggregate.files != self.aggregate.files || !close(again.aggregate.mean_rtf, self.aggregate.mean_rtf) {
            return Err(Error::Header("aggregate does not match records".into()));
        }
        Ok(())
    }

    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(&ReportLine::File(r.clone()))?);
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&ReportLine::Aggregate(self.aggregate.clone()))?);
        out.push('\n');
        Ok(out)
    }

    /// Parse the lines written by [`RunReport::to_json_lines`].
    pub fn from_json_lines(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        let mut aggregate = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str(line)? {
                ReportLine::File(r) if aggregate.is_none() => records.push(r),
                ReportLine::Aggregate(a) if aggregate.is_none() => aggregate = Some(a),
                _ => return Err(Error::Header("report lines after the aggregate".into())),
            }
        }
        let aggregate = aggregate.ok_or_else(|| Error::Header("report has no aggregate line".into()))?;
        let report = RunReport { records, aggregate };
        report.check()?;
        Ok(report)
    }

    pub fn append_to(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_json_lines()?.as_bytes()).map_err(|e| Error::io(path, e))
    }
}
