//! JSON-Lines candidate sets.
//!
//! One object per line:
//!
//! ```json
//! {"question_id": "q1", "responses": [{"text": "...", "embedding": [0.6, 0.8], "gold_answer": "72"}]}
//! ```
//!
//! `embedding` and `gold_answer` may be `null` or absent. Embeddings within
//! `1e-6` of unit norm are renormalized on load; anything else is rejected.
//! Vectors already unit to a few ulps are kept bit-for-bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Accepted deviation of a stored embedding from unit norm.
pub const EMBEDDING_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    #[serde(default)]
    pub embedding: Option<Vec<f64>>,
    #[serde(default)]
    pub gold_answer: Option<String>,
}

impl Candidate {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into(), embedding: None, gold_answer: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub question_id: String,
    pub responses: Vec<Candidate>,
}

impl CandidateSet {
    pub fn texts(&self) -> Vec<&str> {
        self.responses.iter().map(|c| c.text.as_str()).collect()
    }

    /// The question's reference answer: the first non-null `gold_answer`.
    pub fn gold_answer(&self) -> Option<&str> {
        self.responses.iter().find_map(|c| c.gold_answer.as_deref())
    }
}

fn schema(line: usize, field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { line, field: field.into(), message: message.into() }
}

/// Parses and validates one JSONL record; `line` is 1-based.
pub fn parse_candidate_set(json: &str, line: usize) -> Result<CandidateSet> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let mut set: CandidateSet = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() {
            schema(line, field, inner.to_string())
        } else {
            Error::Parse { line, message: inner.to_string() }
        }
    })?;
    if set.question_id.trim().is_empty() {
        return Err(schema(line, "question_id", "must be nonempty"));
    }
    if set.responses.is_empty() {
        return Err(schema(line, "responses", "must contain at least one response"));
    }
    let mut dim = None;
    for (i, c) in set.responses.iter_mut().enumerate() {
        let Some(v) = c.embedding.as_mut() else { continue };
        let field = format!("responses[{i}].embedding");
        match dim {
            None => dim = Some(v.len()),
            Some(d) if d != v.len() => {
                return Err(schema(line, field, format!("dimension {} differs from {d}", v.len())));
            }
            Some(_) => {}
        }
        if v.is_empty() {
            return Err(schema(line, field, "must be nonempty"));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > EMBEDDING_NORM_TOL {
            return Err(Error::EmbeddingNorm { line, response: i, norm });
        }
        // Already unit to working precision: keep the stored bits.
        if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok(set)
}

pub fn read_candidate_sets(reader: impl BufRead) -> Result<Vec<CandidateSet>> {
    let mut sets = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        sets.push(parse_candidate_set(&line, i + 1)?);
    }
    Ok(sets)
}

pub fn load_candidate_sets(path: impl AsRef<Path>) -> Result<Vec<CandidateSet>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_candidate_sets(BufReader::new(file))
}

pub fn write_candidate_sets(path: impl AsRef<Path>, sets: &[CandidateSet]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for set in sets {
        let line = serde_json::to_string(set).expect("candidate sets serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
