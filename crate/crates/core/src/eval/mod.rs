//! Human-judgment evaluation: dataset ingestion, batch scoring, deviation
//! statistics, significance tests, stratified sampling and reports.

mod dataset;
mod report;
mod sampling;
mod scoring;
mod stats;

pub use dataset::{load_dataset, DatasetFormat, EvalPair};
pub use report::{render_report, Report, SignificanceResult};
pub use sampling::{stratified_sample, Stratum, SAMPLE_SETS, PER_STRATUM};
pub use scoring::{
    read_scored_jsonl, score_dataset, write_scored_delimited, write_scored_jsonl, Metric, PairFailure,
    ScoreConfig, ScoreWarnings, ScoredDataset,
};
pub use stats::{
    deviation_stats, improvement, ln_gamma, regularized_incomplete_beta, student_t_sf, welch_t_test,
    DeviationStats, TTest,
};

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("duplicate pair id {0:?}")]
    DuplicateId(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("metric {0} needs an embedding table")]
    MissingEmbeddings(Metric),
    #[error("weight scheme {0} needs an IDF table")]
    MissingIdf(crate::embedding::WeightScheme),
    #[error("every pair failed to score; first failure: {0}")]
    AllPairsFailed(String),
    #[error("pair {0:?} has no human score")]
    MissingHumanScore(String),
    #[error("scored dataset has no {0:?} column")]
    MissingColumn(String),
    #[error("samples have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no values to compare")]
    EmptyInput,
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("stratum {stratum} has {available} pairs, {needed} needed")]
    InsufficientStratum {
        stratum: Stratum,
        needed: usize,
        available: usize,
    },
    #[error("baseline must be positive, got {0}")]
    ZeroBaseline(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Compares every configured metric with the human scores: MSE/MAE per
/// metric and Welch t-tests between the per-pair absolute errors of every
/// pair of metrics (omitted when fewer than two pairs are scored).
pub fn evaluate(scored: &ScoredDataset, config: &ScoreConfig) -> Result<Report, EvalError> {
    let human = scored.human_scores()?;
    let mut stats = IndexMap::new();
    for (name, column) in &scored.metric_columns {
        stats.insert(name.clone(), deviation_stats(column, &human)?);
    }

    let mut tests = Vec::new();
    if human.len() >= 2 {
        let abs_errors: Vec<(&String, Vec<f64>)> = scored
            .metric_columns
            .iter()
            .map(|(name, col)| (name, col.iter().zip(&human).map(|(m, h)| (m - h).abs()).collect()))
            .collect();
        for (a, (name_a, err_a)) in abs_errors.iter().enumerate() {
            for (name_b, err_b) in &abs_errors[a + 1..] {
                match welch_t_test(err_a, err_b) {
                    Ok(test) => tests.push(SignificanceResult {
                        metric_a: (*name_a).clone(),
                        metric_b: (*name_b).clone(),
                        test,
                    }),
                    Err(err) => log::warn!("skipping t-test {name_a} vs {name_b}: {err}"),
                }
            }
        }
    }
    Ok(render_report(scored, stats, tests, config))
}
