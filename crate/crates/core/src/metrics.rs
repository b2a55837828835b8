//! WRDScore and the baselines it is compared against.
//!
//! All embedding-based scores use cosine similarity clamped to `[0, 1]`, so
//! WRD precision coincides with weighted greedy precision and WRD recall is
//! bounded above by weighted greedy recall (greedy recall only enforces the
//! row marginals of the transport problem).

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::WeightedEmbeddingSequence;
use crate::tokenizer::TokenSequence;
use crate::transport::{
    clamped_cosine, cosine_cost_matrix, euclidean_cost_matrix, solve_transport, TransportError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("reference {0} has fewer than {1} tokens")]
    TooShort(String, usize),
    #[error("n-gram order must be positive")]
    ZeroOrder,
    #[error("no references given")]
    NoReferences,
    #[error("sequence {0} contains duplicate tokens")]
    DuplicateTokens(String),
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("{0} vectors but {1} weights")]
    WeightCount(usize, usize),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreTriple {
    /// Builds the triple with `f1` as the harmonic mean (0 when both are 0).
    pub fn new(precision: f64, recall: f64) -> Self {
        Self {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }
}

pub fn harmonic_mean(precision: f64, recall: f64) -> f64 {
    let denom = precision + recall;
    if denom > 0.0 {
        2.0 * precision * recall / denom
    } else {
        0.0
    }
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// ROUGE-N recall of `candidate` against a set of references: clipped n-gram
/// matches summed over references divided by the total reference n-grams.
pub fn rouge_n(references: &[TokenSequence], candidate: &TokenSequence, n: usize) -> Result<f64, MetricError> {
    if n == 0 {
        return Err(MetricError::ZeroOrder);
    }
    if references.is_empty() {
        return Err(MetricError::NoReferences);
    }
    if let Some(short) = references.iter().find(|r| r.len() < n) {
        return Err(MetricError::TooShort(short.to_string(), n));
    }
    let cand = ngrams(candidate.tokens(), n);
    let mut matched = 0usize;
    let mut total = 0usize;
    for reference in references {
        for (gram, count) in ngrams(reference.tokens(), n) {
            total += count;
            matched += count.min(cand.get(gram).copied().unwrap_or(0));
        }
    }
    Ok(matched as f64 / total as f64)
}

fn check_dims(r: &WeightedEmbeddingSequence, p: &WeightedEmbeddingSequence) -> Result<(), MetricError> {
    if r.dimension() != p.dimension() {
        return Err(MetricError::DimensionMismatch(r.dimension(), p.dimension()));
    }
    Ok(())
}

/// For each predicted token, its best clamped similarity to any reference token.
fn best_for_predicted(r: &WeightedEmbeddingSequence, p: &WeightedEmbeddingSequence) -> Vec<f64> {
    p.vectors()
        .iter()
        .map(|pj| {
            r.vectors()
                .iter()
                .map(|ri| clamped_cosine(ri, pj))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// For each reference token, its best clamped similarity to any predicted token.
fn best_for_reference(r: &WeightedEmbeddingSequence, p: &WeightedEmbeddingSequence) -> Vec<f64> {
    r.vectors()
        .iter()
        .map(|ri| {
            p.vectors()
                .iter()
                .map(|pj| clamped_cosine(ri, pj))
                .fold(0.0, f64::max)
        })
        .collect()
}

fn weighted_sum(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// BERTScore-style hard-alignment scores. With `weighted` the per-token
/// maxima are averaged with the sequences' simplex weights instead of
/// uniformly.
pub fn greedy_match_score(
    r: &WeightedEmbeddingSequence,
    p: &WeightedEmbeddingSequence,
    weighted: bool,
) -> Result<ScoreTriple, MetricError> {
    check_dims(r, p)?;
    let pred_best = best_for_predicted(r, p);
    let ref_best = best_for_reference(r, p);
    let (precision, recall) = if weighted {
        (weighted_sum(&pred_best, p.weights()), weighted_sum(&ref_best, r.weights()))
    } else {
        (mean(&pred_best), mean(&ref_best))
    };
    Ok(ScoreTriple::new(precision, recall))
}

/// `sum_j w^p_j * max_i clamp(r_i . p_j)`: how well each predicted token is
/// covered by its best reference match.
pub fn wrd_precision(r: &WeightedEmbeddingSequence, p: &WeightedEmbeddingSequence) -> Result<f64, MetricError> {
    check_dims(r, p)?;
    Ok(weighted_sum(&best_for_predicted(r, p), p.weights()))
}

/// One minus the optimal transport cost (Word Rotator's Distance) from the
/// reference distribution to the predicted one under cosine distance.
pub fn wrd_recall(r: &WeightedEmbeddingSequence, p: &WeightedEmbeddingSequence) -> Result<f64, MetricError> {
    check_dims(r, p)?;
    let cost = cosine_cost_matrix(r, p)?;
    let plan = solve_transport(r.weights(), p.weights(), &cost)?;
    Ok((1.0 - plan.cost()).clamp(0.0, 1.0))
}

pub fn wrdscore(r: &WeightedEmbeddingSequence, p: &WeightedEmbeddingSequence) -> Result<ScoreTriple, MetricError> {
    Ok(ScoreTriple::new(wrd_precision(r, p)?, wrd_recall(r, p)?))
}

/// Set-based scores next to the one-hot greedy scores they reduce to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneHotReduction {
    pub set_based: ScoreTriple,
    pub one_hot: ScoreTriple,
}

/// Computes classical TP/FP/FN precision, recall and F1 alongside the
/// unweighted greedy scores obtained by embedding every token as a one-hot
/// vector over the joint vocabulary.
pub fn one_hot_reduction_check(r: &TokenSequence, p: &TokenSequence) -> Result<OneHotReduction, MetricError> {
    for seq in [r, p] {
        let unique: HashSet<&str> = seq.iter().collect();
        if unique.len() != seq.len() {
            return Err(MetricError::DuplicateTokens(seq.to_string()));
        }
    }
    let ref_set: HashSet<&str> = r.iter().collect();
    let pred_set: HashSet<&str> = p.iter().collect();
    let tp = ref_set.intersection(&pred_set).count() as f64;
    let fp = pred_set.difference(&ref_set).count() as f64;
    let fn_ = ref_set.difference(&pred_set).count() as f64;
    let set_based = ScoreTriple::new(tp / (tp + fp), tp / (tp + fn_));

    let mut vocab: Vec<&str> = ref_set.union(&pred_set).copied().collect();
    vocab.sort_unstable();
    let one_hot = |seq: &TokenSequence| {
        let vectors = seq
            .iter()
            .map(|t| {
                let mut v = vec![0.0; vocab.len()];
                v[vocab.binary_search(&t).expect("token in vocabulary")] = 1.0;
                v
            })
            .collect();
        WeightedEmbeddingSequence::uniform(vectors).expect("one-hot vectors are unit")
    };
    let one_hot = greedy_match_score(&one_hot(r), &one_hot(p), false)?;
    Ok(OneHotReduction { set_based, one_hot })
}

/// Word Mover's Distance: optimal transport cost under Euclidean distance
/// between raw (unnormalized) vectors. Returned as a distance, not a score.
pub fn wmd_baseline(
    r_vectors: &[Vec<f64>],
    r_weights: &[f64],
    p_vectors: &[Vec<f64>],
    p_weights: &[f64],
) -> Result<f64, MetricError> {
    if r_vectors.len() != r_weights.len() {
        return Err(MetricError::WeightCount(r_vectors.len(), r_weights.len()));
    }
    if p_vectors.len() != p_weights.len() {
        return Err(MetricError::WeightCount(p_vectors.len(), p_weights.len()));
    }
    let cost = euclidean_cost_matrix(r_vectors, p_vectors)?;
    Ok(solve_transport(r_weights, p_weights, &cost)?.cost())
}

/// [`wmd_baseline`] over the raw vectors and weights of embedded sequences.
pub fn wmd_between(r: &WeightedEmbeddingSequence, p: &WeightedEmbeddingSequence) -> Result<f64, MetricError> {
    wmd_baseline(&r.raw_vectors(), r.weights(), &p.raw_vectors(), p.weights())
}
