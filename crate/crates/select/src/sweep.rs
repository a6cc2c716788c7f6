//! Benchmark sweep parameters and CSV output.

use consensus_core::bench::SweepRow;

use crate::float::format_sig6;
use crate::{Error, Result};

pub const SWEEP_HEADER: [&str; 5] = ["method", "majority_size", "trials", "consistency", "mean_k_star"];

/// Parses `a..b` (inclusive, as is `a..=b`), a comma list, or a single size.
pub fn parse_sizes(list: &str) -> Result<Vec<usize>> {
    let bad = || Error::Usage(format!("invalid size list `{list}` (use e.g. 2..9 or 3,5,7)"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let sizes = if let Some((lo, hi)) = list.split_once("..") {
        let (lo, hi) = (num(lo)?, num(hi.strip_prefix('=').unwrap_or(hi))?);
        if lo > hi {
            return Err(bad());
        }
        (lo..=hi).collect()
    } else {
        list.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if sizes.is_empty() {
        return Err(bad());
    }
    Ok(sizes)
}

pub fn render_sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).expect("writing to memory");
    for r in rows {
        w.write_record([
            r.method.name().to_owned(),
            r.majority_size.to_string(),
            r.trials.to_string(),
            format_sig6(r.consistency),
            r.mean_k_star.map(format_sig6).unwrap_or_default(),
        ])
        .expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}
