//! Applies one selection method to every candidate set and scores the run.

use consensus_core::curation::{cap_majority, filter_singletons, CapMode};
use consensus_core::metrics::{consistency_score, ece, CalibrationReport, DEFAULT_ECE_BINS};
use consensus_core::scl::{toy_embedding, LabeledGroup, SclConfig};
use consensus_core::selection::{
    select_arithmetic_mean, select_dynamic_topk, select_exp_weighted, select_random, DEFAULT_TAU_PRIME,
};
use consensus_core::vote::{majority_set, sc_vote};
use consensus_core::wucs::wucs_scores;
use consensus_core::{
    cosine_similarity_matrix, extract_answer, Embedding, ExtractedAnswer, Method, SelectionConfig, SelectionResult,
};

use crate::candidates::CandidateSet;
use crate::report::QuestionResult;
use crate::suffix::SuffixFile;
use crate::usc::Judge;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub tau_prime: f64,
    pub seed: u64,
    pub ece_bins: usize,
}

impl RunConfig {
    pub fn new(method: Method) -> Self {
        Self { method, tau_prime: DEFAULT_TAU_PRIME, seed: 0, ece_bins: DEFAULT_ECE_BINS }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_prime > 0.0 && self.tau_prime.is_finite()) {
            return Err(Error::Usage(format!("--tau-prime must be positive, got {}", self.tau_prime)));
        }
        if self.ece_bins == 0 {
            return Err(Error::Usage("--ece-bins must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub questions: usize,
    /// Over questions with a gold answer.
    pub accuracy: Option<f64>,
    /// Over questions where a majority answer exists.
    pub consistency: Option<f64>,
    /// Over questions with a gold answer.
    pub calibration: Option<CalibrationReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub results: Vec<QuestionResult>,
    pub summary: Summary,
}

fn embeddings_of(set: &CandidateSet) -> Result<Vec<Embedding>> {
    let missing: Vec<usize> =
        set.responses.iter().enumerate().filter(|(_, c)| c.embedding.is_none()).map(|(i, _)| i).collect();
    if !missing.is_empty() {
        return Err(Error::MissingEmbeddings { question_id: set.question_id.clone(), missing });
    }
    set.responses
        .iter()
        .map(|c| Embedding::normalize(c.embedding.clone().unwrap_or_default()))
        .collect::<consensus_core::Result<_>>()
        .map_err(|source| Error::Method { question_id: set.question_id.clone(), source })
}

fn select_one(
    set: &CandidateSet,
    index: usize,
    answers: &[Option<ExtractedAnswer>],
    cfg: &RunConfig,
    judge: Option<&dyn Judge>,
) -> Result<SelectionResult> {
    let method_err = |source| Error::Method { question_id: set.question_id.clone(), source };
    let sel = SelectionConfig::with_tau_prime(cfg.tau_prime).map_err(method_err)?;
    match cfg.method {
        Method::ExpWeighted | Method::DynamicTopK | Method::ArithmeticMean => {
            let s = cosine_similarity_matrix(&embeddings_of(set)?).map_err(method_err)?;
            match cfg.method {
                Method::ExpWeighted => select_exp_weighted(&s, &sel),
                Method::DynamicTopK => select_dynamic_topk(&s, &sel),
                _ => select_arithmetic_mean(&s, &sel),
            }
            .map_err(method_err)
        }
        Method::SelfConsistency => sc_vote(answers).map_err(method_err),
        Method::Wucs => wucs_scores(&set.texts(), &sel).map_err(method_err),
        Method::Usc => {
            let judge = judge.ok_or_else(|| Error::Usage("method usc needs a judge endpoint (--usc-url)".into()))?;
            judge.judge(&set.texts()).map_err(|source| Error::Judge { question_id: set.question_id.clone(), source })
        }
        Method::Random => select_random(set.responses.len(), cfg.seed, index as u64).map_err(method_err),
    }
}

fn mean(flags: impl Iterator<Item = bool>) -> Option<f64> {
    let (hits, total) = flags.fold((0usize, 0usize), |(h, t), f| (h + f as usize, t + 1));
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Runs `cfg.method` over every set, in input order.
///
/// A response is correct when its extracted answer equals the gold answer
/// after whitespace normalization. A selection is consistent when the
/// winner carries the most frequent extracted answer.
pub fn run_selection(sets: &[CandidateSet], cfg: &RunConfig, judge: Option<&dyn Judge>) -> Result<RunOutput> {
    cfg.validate()?;
    let mut results = Vec::with_capacity(sets.len());
    for (index, set) in sets.iter().enumerate() {
        let answers: Vec<Option<ExtractedAnswer>> = set.responses.iter().map(|c| extract_answer(&c.text)).collect();
        let sel = select_one(set, index, &answers, cfg, judge)?;
        let answer = answers[sel.winner_index].as_ref().map(|a| a.normalized.clone());
        let correct = set.gold_answer().map(|g| answer.as_deref() == Some(ExtractedAnswer::new(g).normalized.as_str()));
        let consistent = majority_set(&answers).ok().map(|m| m.contains(&sel.winner_index));
        results.push(QuestionResult {
            question_id: set.question_id.clone(),
            method: sel.method.name().to_owned(),
            winner_index: sel.winner_index,
            confidence: sel.confidence,
            k_star: sel.k_star,
            scores: sel.scores,
            answer,
            correct,
            consistent,
        });
    }
    let summary = summarize(&results, cfg.ece_bins)?;
    Ok(RunOutput { results, summary })
}

/// Accuracy, consistency and calibration of finished results.
pub fn summarize(results: &[QuestionResult], ece_bins: usize) -> Result<Summary> {
    let graded: Vec<(f64, bool)> = results.iter().filter_map(|r| r.correct.map(|c| (r.confidence, c))).collect();
    let calibration = if graded.is_empty() {
        None
    } else {
        let (conf, correct): (Vec<f64>, Vec<bool>) = graded.iter().copied().unzip();
        Some(ece(&conf, &correct, ece_bins).map_err(|e| Error::Report(e.to_string()))?)
    };
    Ok(Summary {
        questions: results.len(),
        accuracy: mean(results.iter().filter_map(|r| r.correct)),
        consistency: mean(results.iter().filter_map(|r| r.consistent)),
        calibration,
    })
}

/// Re-scores saved predictions against the candidate file they came from.
///
/// Predictions are matched to sets by `question_id`; correctness and
/// consistency are recomputed from the input rather than trusted.
pub fn evaluate(sets: &[CandidateSet], predictions: &[QuestionResult], ece_bins: usize) -> Result<Summary> {
    if ece_bins == 0 {
        return Err(Error::Usage("--ece-bins must be at least 1".into()));
    }
    let by_id: std::collections::HashMap<&str, &CandidateSet> =
        sets.iter().map(|s| (s.question_id.as_str(), s)).collect();
    let mut rescored = Vec::with_capacity(predictions.len());
    let mut selections = Vec::new();
    let mut majorities = Vec::new();
    for p in predictions {
        let set = by_id
            .get(p.question_id.as_str())
            .ok_or_else(|| Error::Report(format!("prediction for unknown question `{}`", p.question_id)))?;
        if p.winner_index >= set.responses.len() {
            return Err(Error::Report(format!(
                "question `{}`: winner_index {} out of range for {} responses",
                p.question_id,
                p.winner_index,
                set.responses.len()
            )));
        }
        let answers: Vec<_> = set.responses.iter().map(|c| extract_answer(&c.text)).collect();
        let answer = answers[p.winner_index].as_ref().map(|a| a.normalized.clone());
        let correct = set.gold_answer().map(|g| answer.as_deref() == Some(ExtractedAnswer::new(g).normalized.as_str()));
        let majority = majority_set(&answers).ok();
        if let Some(m) = &majority {
            selections.push(p.winner_index);
            majorities.push(m.clone());
        }
        rescored.push(QuestionResult { answer, correct, consistent: majority.map(|m| m.contains(&p.winner_index)), ..p.clone() });
    }
    let mut summary = summarize(&rescored, ece_bins)?;
    if !selections.is_empty() {
        summary.consistency =
            Some(consistency_score(&selections, &majorities).map_err(|e| Error::Report(e.to_string()))?);
    }
    Ok(summary)
}

/// Contrastive training groups from candidate sets.
///
/// Each response is labeled with its extracted answer; responses without
/// one are dropped. Singleton labels are then removed and the majority
/// label capped. Groups left with fewer than two responses are skipped.
pub fn training_groups(sets: &[CandidateSet], mode: CapMode, seed: u64) -> Vec<LabeledGroup> {
    sets.iter()
        .enumerate()
        .filter_map(|(i, set)| {
            let (responses, labels) = set
                .responses
                .iter()
                .filter_map(|c| extract_answer(&c.text).map(|a| (c.text.clone(), a.normalized)))
                .unzip();
            let group = filter_singletons(&LabeledGroup { responses, labels });
            cap_majority(&group, mode, seed.wrapping_add(i as u64))
        })
        .filter(|g| g.len() >= 2)
        .collect()
}

/// Replaces every embedding with its toy-encoder embedding under `suffix`.
pub fn toy_encode_sets(sets: &mut [CandidateSet], suffix: &SuffixFile) -> Result<()> {
    let cfg = SclConfig { tokens: suffix.suffix.tokens(), dim: suffix.suffix.dim(), ..SclConfig::default() };
    for set in sets {
        for c in &mut set.responses {
            let e = toy_embedding(&c.text, &suffix.suffix, &cfg)
                .map_err(|source| Error::Method { question_id: set.question_id.clone(), source })?;
            c.embedding = Some(e.into_inner());
        }
    }
    Ok(())
}
