//! Text format for trained suffix embeddings.
//!
//! ```text
//! sclsuffix v1 <K> <d> <seed>
//! <d space-separated values>      (K lines)
//! ```
//!
//! Values use the shortest representation that parses back to the same
//! `f64`, so a save/load cycle is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use consensus_core::scl::SuffixEmbeddings;

use crate::{Error, Result};

const MAGIC: &str = "sclsuffix";
const VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq)]
pub struct SuffixFile {
    pub seed: u64,
    pub suffix: SuffixEmbeddings,
}

pub fn render_suffix(file: &SuffixFile) -> String {
    let u = &file.suffix;
    let mut out = format!("{MAGIC} {VERSION} {} {} {}\n", u.tokens(), u.dim(), file.seed);
    for m in 0..u.tokens() {
        let row: Vec<String> = u.row(m).iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::SuffixFormat { line, message: message.into() }
}

pub fn parse_suffix(text: &str) -> Result<SuffixFile> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| bad(1, "empty file"))?.split_whitespace().collect();
    let [magic, version, k, d, seed] = header[..] else {
        return Err(bad(1, "expected `sclsuffix v1 K d seed`"));
    };
    if magic != MAGIC || version != VERSION {
        return Err(bad(1, format!("unsupported header `{magic} {version}`")));
    }
    let parse_count = |s: &str, what: &str| s.parse::<usize>().map_err(|_| bad(1, format!("invalid {what} `{s}`")));
    let (k, d) = (parse_count(k, "K")?, parse_count(d, "d")?);
    let seed = seed.parse::<u64>().map_err(|_| bad(1, format!("invalid seed `{seed}`")))?;
    let mut rows = Vec::with_capacity(k);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        if rows.len() == k {
            return Err(bad(lineno, format!("more than {k} rows")));
        }
        let row = line
            .split_whitespace()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad(lineno, "non-numeric or non-finite value"))?;
        if row.len() != d {
            return Err(bad(lineno, format!("expected {d} values, found {}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != k {
        return Err(bad(k + 1, format!("expected {k} rows, found {}", rows.len())));
    }
    let suffix = SuffixEmbeddings::from_rows(rows).map_err(|e| bad(1, e.to_string()))?;
    Ok(SuffixFile { seed, suffix })
}

pub fn write_suffix(path: impl AsRef<Path>, file: &SuffixFile) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_suffix(file)).map_err(|e| Error::io(path, e))
}

pub fn read_suffix(path: impl AsRef<Path>) -> Result<SuffixFile> {
    let path = path.as_ref();
    parse_suffix(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
