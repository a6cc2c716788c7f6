//! Consistency and calibration metrics.

use alloc::vec::Vec;

use crate::{Error, Result};

pub use crate::vote::majority_set;

/// Default number of equal-width calibration bins.
pub const DEFAULT_ECE_BINS: usize = 10;

/// Fraction of items whose selected index lies in the item's majority set.
/// An empty majority set never contains the selection.
pub fn consistency_score<S: AsRef<[usize]>>(selections: &[usize], majority_sets: &[S]) -> Result<f64> {
    if selections.len() != majority_sets.len() {
        return Err(Error::LengthMismatch { left: selections.len(), right: majority_sets.len() });
    }
    if selections.is_empty() {
        return Err(Error::InvalidConfig("consistency of an empty selection list"));
    }
    let hits = selections.iter().zip(majority_sets).filter(|(w, set)| set.as_ref().contains(w)).count();
    Ok(hits as f64 / selections.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Zero for an empty bin.
    pub mean_confidence: f64,
    /// Zero for an empty bin.
    pub empirical_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub bins: Vec<CalibrationBin>,
    pub ece: f64,
}

impl CalibrationReport {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Bin of `c` among `n_bins` equal-width bins: `[0, 1/B]`, then `(b/B, (b+1)/B]`.
fn bin_index(c: f64, n_bins: usize) -> usize {
    (0..n_bins).find(|&b| c <= (b + 1) as f64 / n_bins as f64).unwrap_or(n_bins - 1)
}

/// Expected calibration error with equal-width bins over `[0, 1]`.
///
/// The first bin is closed on both sides and every other bin is
/// right-closed. `ece = sum_b (n_b / n) * |conf_b - acc_b|` over nonempty bins.
pub fn ece(confidences: &[f64], correct: &[bool], n_bins: usize) -> Result<CalibrationReport> {
    if confidences.len() != correct.len() {
        return Err(Error::LengthMismatch { left: confidences.len(), right: correct.len() });
    }
    if n_bins == 0 {
        return Err(Error::InvalidConfig("need at least one calibration bin"));
    }
    if let Some(&c) = confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(Error::ConfidenceOutOfRange(c));
    }
    let mut sums = alloc::vec![(0usize, 0.0f64, 0usize); n_bins];
    for (&c, &ok) in confidences.iter().zip(correct) {
        let slot = &mut sums[bin_index(c, n_bins)];
        slot.0 += 1;
        slot.1 += c;
        slot.2 += usize::from(ok);
    }
    let total = confidences.len() as f64;
    let mut ece = 0.0;
    let bins = sums
        .into_iter()
        .enumerate()
        .map(|(b, (count, conf_sum, hits))| {
            let (mean_confidence, empirical_accuracy) =
                if count == 0 { (0.0, 0.0) } else { (conf_sum / count as f64, hits as f64 / count as f64) };
            if count > 0 {
                ece += count as f64 / total * libm::fabs(mean_confidence - empirical_accuracy);
            }
            CalibrationBin {
                lower: b as f64 / n_bins as f64,
                upper: (b + 1) as f64 / n_bins as f64,
                count,
                mean_confidence,
                empirical_accuracy,
            }
        })
        .collect();
    Ok(CalibrationReport { bins, ece })
}
