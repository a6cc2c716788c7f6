//! Exact-match majority voting over extracted answers.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::answer::ExtractedAnswer;
use crate::selection::{Method, SelectionResult};
use crate::{Error, Result};

/// Vote counts keyed by normalized answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTally {
    pub counts: BTreeMap<String, usize>,
    /// Number of candidates, including those without an answer.
    pub total: usize,
    first_seen: BTreeMap<String, usize>,
}

impl VoteTally {
    pub fn new(answers: &[Option<ExtractedAnswer>]) -> Self {
        let mut counts = BTreeMap::new();
        let mut first_seen = BTreeMap::new();
        for (i, a) in answers.iter().enumerate() {
            if let Some(a) = a {
                *counts.entry(a.normalized.clone()).or_insert(0) += 1;
                first_seen.entry(a.normalized.clone()).or_insert(i);
            }
        }
        Self { counts, total: answers.len(), first_seen }
    }

    /// The most frequent answer and its count; ties go to the answer that
    /// appeared first.
    pub fn modal(&self) -> Option<(&str, usize)> {
        self.counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(self.first_seen[b.0].cmp(&self.first_seen[a.0])))
            .map(|(k, &c)| (k.as_str(), c))
    }

    pub fn first_index(&self, answer: &str) -> Option<usize> {
        self.first_seen.get(answer).copied()
    }
}

/// Self-consistency voting: the first candidate holding the modal answer.
///
/// `scores[i]` is the vote share of candidate `i`'s answer over all
/// candidates (zero when it has none); confidence is the winner's share.
pub fn sc_vote(answers: &[Option<ExtractedAnswer>]) -> Result<SelectionResult> {
    let tally = VoteTally::new(answers);
    let (modal, count) = tally.modal().ok_or(Error::NoExtractableAnswers)?;
    let winner_index = tally.first_index(modal).expect("modal answer was seen");
    let total = tally.total as f64;
    let scores = answers
        .iter()
        .map(|a| a.as_ref().map_or(0.0, |a| tally.counts[&a.normalized] as f64 / total))
        .collect();
    Ok(SelectionResult {
        winner_index,
        scores,
        method: Method::SelfConsistency,
        k_star: None,
        confidence: count as f64 / total,
    })
}

/// Indices of every candidate that carries the modal answer.
pub fn majority_set(answers: &[Option<ExtractedAnswer>]) -> Result<Vec<usize>> {
    let tally = VoteTally::new(answers);
    let (modal, _) = tally.modal().ok_or(Error::NoExtractableAnswers)?;
    Ok(answers
        .iter()
        .enumerate()
        .filter(|(_, a)| a.as_ref().is_some_and(|a| a.normalized == modal))
        .map(|(i, _)| i)
        .collect())
}
