//! Per-question result reports.
//!
//! Both formats use a fixed field order and render floats with six
//! significant digits, so identical results give byte-identical files.
//! CSV leaves absent values empty; JSONL writes `null` and also carries the
//! full score vector.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::float::{format_sig6, round_sig6};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(Error::Usage(format!("unknown report format `{other}` (expected csv or jsonl)"))),
        }
    }
}

impl ReportFormat {
    /// Guesses the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Jsonl,
        }
    }
}

pub const CSV_HEADER: [&str; 8] =
    ["question_id", "method", "winner_index", "confidence", "k_star", "answer", "correct", "consistent"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub question_id: String,
    pub method: String,
    pub winner_index: usize,
    pub confidence: f64,
    #[serde(default)]
    pub k_star: Option<usize>,
    #[serde(default)]
    pub scores: Vec<f64>,
    /// Extracted answer of the winning response.
    #[serde(default)]
    pub answer: Option<String>,
    #[serde(default)]
    pub correct: Option<bool>,
    #[serde(default)]
    pub consistent: Option<bool>,
}

impl QuestionResult {
    fn rounded(&self) -> Self {
        Self {
            confidence: round_sig6(self.confidence),
            scores: self.scores.iter().copied().map(round_sig6).collect(),
            ..self.clone()
        }
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn render_csv(results: &[QuestionResult], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        w.write_record([
            r.question_id.clone(),
            r.method.clone(),
            r.winner_index.to_string(),
            format_sig6(r.confidence),
            opt(&r.k_star),
            opt(&r.answer),
            opt(&r.correct),
            opt(&r.consistent),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn render_jsonl(results: &[QuestionResult], mut out: impl Write) -> std::io::Result<()> {
    for r in results {
        let line = serde_json::to_string(&r.rounded()).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    out.flush()
}

/// Renders a report into memory.
pub fn render_report(results: &[QuestionResult], format: ReportFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    match format {
        ReportFormat::Csv => render_csv(results, &mut buf).expect("writing to memory"),
        ReportFormat::Jsonl => render_jsonl(results, &mut buf).expect("writing to memory"),
    }
    buf
}

pub fn write_report(results: &[QuestionResult], path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&render_report(results, format)).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

fn parse_opt<T: FromStr>(field: &str, name: &str, line: usize) -> Result<Option<T>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| Error::Report(format!("line {line}: bad {name} `{field}`")))
}

fn parse_csv(reader: impl std::io::Read) -> Result<Vec<QuestionResult>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(|e| Error::Report(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Report(format!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut results = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Report(format!("line {line}: {e}")))?;
        let winner_index = parse_opt(&rec[2], "winner_index", line)?
            .ok_or_else(|| Error::Report(format!("line {line}: missing winner_index")))?;
        let confidence = parse_opt(&rec[3], "confidence", line)?
            .ok_or_else(|| Error::Report(format!("line {line}: missing confidence")))?;
        results.push(QuestionResult {
            question_id: rec[0].to_owned(),
            method: rec[1].to_owned(),
            winner_index,
            confidence,
            k_star: parse_opt(&rec[4], "k_star", line)?,
            scores: Vec::new(),
            answer: (!rec[5].is_empty()).then(|| rec[5].to_owned()),
            correct: parse_opt(&rec[6], "correct", line)?,
            consistent: parse_opt(&rec[7], "consistent", line)?,
        });
    }
    Ok(results)
}

fn parse_jsonl(reader: impl BufRead) -> Result<Vec<QuestionResult>> {
    let mut results = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Report(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| Error::Report(format!("line {}: {e}", i + 1)))?;
        results.push(r);
    }
    Ok(results)
}

/// Reads a report written by [`write_report`]. CSV rows come back without scores.
pub fn read_report(reader: impl BufRead, format: ReportFormat) -> Result<Vec<QuestionResult>> {
    match format {
        ReportFormat::Csv => parse_csv(reader),
        ReportFormat::Jsonl => parse_jsonl(reader),
    }
}

pub fn load_report(path: impl AsRef<Path>, format: ReportFormat) -> Result<Vec<QuestionResult>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_report(BufReader::new(file), format)
}
