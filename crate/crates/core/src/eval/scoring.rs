use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{EvalError, EvalPair};
use crate::embedding::{embed_sequence, EmbeddingError, EmbeddingTable, IdfTable, OovPolicy, WeightScheme};
use crate::metrics::{greedy_match_score, rouge_n, wmd_between, wrdscore};
use crate::tokenizer::split_identifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rouge1,
    Rouge2,
    Greedy,
    Wrdscore,
    Wmd,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Self::Rouge1, Self::Rouge2, Self::Greedy, Self::Wrdscore, Self::Wmd];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rouge1 => "rouge1",
            Self::Rouge2 => "rouge2",
            Self::Greedy => "greedy",
            Self::Wrdscore => "wrdscore",
            Self::Wmd => "wmd",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(self, Self::Greedy | Self::Wrdscore | Self::Wmd)
    }

    /// Whether values are confined to `[0, 1]` (WMD is a raw distance).
    pub fn is_normalized(self) -> bool {
        self != Self::Wmd
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric {s:?} (expected rouge1, rouge2, greedy, wrdscore or wmd)"))
    }
}

/// Which metrics to compute and how to weight embedded tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub metrics: Vec<Metric>,
    pub weight_scheme: WeightScheme,
    pub oov_policy: OovPolicy,
    /// Use simplex weights in the greedy metric instead of uniform averages.
    pub greedy_weighted: bool,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            metrics: vec![Metric::Rouge1, Metric::Wrdscore],
            weight_scheme: WeightScheme::Norm,
            oov_policy: OovPolicy::Skip,
            greedy_weighted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreWarnings {
    /// Pairs where one side had no in-vocabulary token; embedding metrics are 0.
    pub oov_pairs: usize,
    /// Individual tokens skipped as out-of-vocabulary.
    pub oov_tokens: usize,
    pub failures: Vec<PairFailure>,
}

/// Pairs with one column of values per metric, aligned by index.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDataset {
    pub pairs: Vec<EvalPair>,
    pub metric_columns: IndexMap<String, Vec<f64>>,
    pub warnings: ScoreWarnings,
}

impl ScoredDataset {
    pub fn column(&self, name: &str) -> Result<&[f64], EvalError> {
        self.metric_columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| EvalError::MissingColumn(name.to_string()))
    }

    /// Human scores of every pair, failing on the first pair without one.
    pub fn human_scores(&self) -> Result<Vec<f64>, EvalError> {
        self.pairs
            .iter()
            .map(|p| p.human_score.ok_or_else(|| EvalError::MissingHumanScore(p.id.clone())))
            .collect()
    }
}

struct PairOutcome {
    values: Vec<f64>,
    oov_tokens: usize,
    oov_pair: bool,
    failures: Vec<PairFailure>,
    failed: bool,
}

fn score_pair(
    pair: &EvalPair,
    table: Option<&EmbeddingTable>,
    idf: Option<&IdfTable>,
    config: &ScoreConfig,
) -> PairOutcome {
    let metrics = &config.metrics;
    let mut outcome = PairOutcome {
        values: vec![0.0; metrics.len()],
        oov_tokens: 0,
        oov_pair: false,
        failures: Vec::new(),
        failed: false,
    };
    let fail = |metric: Option<Metric>, message: String| PairFailure {
        id: pair.id.clone(),
        metric: metric.map(|m| m.name().to_string()),
        message,
    };

    let (reference, prediction) = match (split_identifier(&pair.reference), split_identifier(&pair.prediction)) {
        (Ok(r), Ok(p)) => (r, p),
        (Err(e), _) | (_, Err(e)) => {
            outcome.failures.push(fail(None, e.to_string()));
            outcome.failed = true;
            return outcome;
        }
    };

    let mut embedded = None;
    let mut embed_error = None;
    if let (true, Some(table)) = (metrics.iter().any(|m| m.needs_embeddings()), table) {
        let embed = |seq| embed_sequence(table, seq, config.weight_scheme, idf, config.oov_policy);
        match (embed(&reference), embed(&prediction)) {
            (Ok(r), Ok(p)) => {
                outcome.oov_tokens = r.skipped().len() + p.skipped().len();
                embedded = Some((r, p));
            }
            (Err(EmbeddingError::AllTokensOov(_)), _) | (_, Err(EmbeddingError::AllTokensOov(_))) => {
                outcome.oov_pair = true;
                outcome.oov_tokens = reference.iter().chain(prediction.iter()).filter(|t| !table.contains(t)).count();
            }
            (Err(e), _) | (_, Err(e)) => embed_error = Some(e.to_string()),
        }
    }

    let mut failed_metrics = 0;
    for (slot, &metric) in outcome.values.iter_mut().zip(metrics) {
        let value = match metric {
            Metric::Rouge1 | Metric::Rouge2 => {
                let n = if metric == Metric::Rouge1 { 1 } else { 2 };
                rouge_n(std::slice::from_ref(&reference), &prediction, n).map_err(|e| e.to_string())
            }
            _ if outcome.oov_pair => Ok(0.0),
            _ => match (&embedded, &embed_error) {
                (Some((r, p)), _) => match metric {
                    Metric::Greedy => greedy_match_score(r, p, config.greedy_weighted).map(|s| s.f1),
                    Metric::Wrdscore => wrdscore(r, p).map(|s| s.f1),
                    _ => wmd_between(r, p),
                }
                .map_err(|e| e.to_string()),
                (None, Some(e)) => Err(e.clone()),
                (None, None) => Err("no embedding table".to_string()),
            },
        };
        match value {
            Ok(v) => *slot = v,
            Err(message) => {
                failed_metrics += 1;
                outcome.failures.push(fail(Some(metric), message));
            }
        }
    }
    outcome.failed = !metrics.is_empty() && failed_metrics == metrics.len();
    outcome
}

/// Tokenizes, embeds and scores every pair with each configured metric.
///
/// Per-pair problems are recorded in the warnings and the affected values
/// set to 0 so columns stay aligned with the input; only a dataset where
/// every pair fails is an error. Pairs are scored in parallel but results
/// keep input order.
pub fn score_dataset(
    pairs: &[EvalPair],
    table: Option<&EmbeddingTable>,
    idf: Option<&IdfTable>,
    config: &ScoreConfig,
) -> Result<ScoredDataset, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    if table.is_none() {
        if let Some(&m) = config.metrics.iter().find(|m| m.needs_embeddings()) {
            return Err(EvalError::MissingEmbeddings(m));
        }
    }
    let uses_embeddings = config.metrics.iter().any(|m| m.needs_embeddings());
    if uses_embeddings && config.weight_scheme.needs_idf() && idf.is_none() {
        return Err(EvalError::MissingIdf(config.weight_scheme));
    }

    let outcomes: Vec<PairOutcome> = pairs
        .par_iter()
        .map(|pair| score_pair(pair, table, idf, config))
        .collect();

    if outcomes.iter().all(|o| o.failed) {
        let first = outcomes
            .iter()
            .flat_map(|o| &o.failures)
            .next()
            .map_or_else(String::new, |f| format!("{}: {}", f.id, f.message));
        return Err(EvalError::AllPairsFailed(first));
    }

    let mut metric_columns: IndexMap<String, Vec<f64>> = config
        .metrics
        .iter()
        .map(|m| (m.name().to_string(), Vec::with_capacity(pairs.len())))
        .collect();
    let mut warnings = ScoreWarnings::default();
    for outcome in outcomes {
        for (column, value) in metric_columns.values_mut().zip(outcome.values) {
            column.push(value);
        }
        warnings.oov_tokens += outcome.oov_tokens;
        warnings.oov_pairs += usize::from(outcome.oov_pair);
        warnings.failures.extend(outcome.failures);
    }
    if warnings.oov_pairs > 0 || !warnings.failures.is_empty() {
        log::warn!(
            "{} pairs fully out of vocabulary, {} scoring failures",
            warnings.oov_pairs,
            warnings.failures.len()
        );
    }

    Ok(ScoredDataset {
        pairs: pairs.to_vec(),
        metric_columns,
        warnings,
    })
}

const PAIR_KEYS: [&str; 4] = ["id", "reference", "prediction", "human_score"];

/// One JSON object per pair: the pair fields followed by one key per metric.
pub fn write_scored_jsonl<W: Write>(scored: &ScoredDataset, mut out: W) -> Result<(), EvalError> {
    for (idx, pair) in scored.pairs.iter().enumerate() {
        let mut row = Map::new();
        row.insert("id".into(), Value::from(pair.id.clone()));
        row.insert("reference".into(), Value::from(pair.reference.clone()));
        row.insert("prediction".into(), Value::from(pair.prediction.clone()));
        if let Some(h) = pair.human_score {
            row.insert("human_score".into(), Value::from(h));
        }
        for (name, column) in &scored.metric_columns {
            row.insert(name.clone(), Value::from(column[idx]));
        }
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// CSV/TSV with a header row; metric values are printed with 4 decimals.
pub fn write_scored_delimited<W: Write>(scored: &ScoredDataset, out: W, delimiter: u8) -> Result<(), EvalError> {
    let mut writer = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    let mut header: Vec<&str> = PAIR_KEYS.to_vec();
    header.extend(scored.metric_columns.keys().map(String::as_str));
    writer.write_record(&header)?;
    for (idx, pair) in scored.pairs.iter().enumerate() {
        let mut record = vec![
            pair.id.clone(),
            pair.reference.clone(),
            pair.prediction.clone(),
            pair.human_score.map(|h| h.to_string()).unwrap_or_default(),
        ];
        record.extend(scored.metric_columns.values().map(|c| format!("{:.4}", c[idx])));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads the output of [`write_scored_jsonl`]. Every numeric key other than
/// the pair fields becomes a metric column, in first-row order.
pub fn read_scored_jsonl<R: BufRead>(reader: R) -> Result<ScoredDataset, EvalError> {
    let mut pairs = Vec::new();
    let mut metric_columns: IndexMap<String, Vec<f64>> = IndexMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let format_err = |message: String| EvalError::Format { line: idx + 1, message };
        let row: Map<String, Value> = serde_json::from_str(&line).map_err(|e| format_err(e.to_string()))?;
        let text = |key: &str| {
            row.get(key)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| format_err(format!("missing string field {key:?}")))
        };
        let human_score = match row.get("human_score") {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_f64().ok_or_else(|| format_err("human_score is not a number".into()))?),
        };
        let metrics: Vec<(&String, f64)> = row
            .iter()
            .filter(|(k, _)| !PAIR_KEYS.contains(&k.as_str()))
            .map(|(k, v)| {
                v.as_f64()
                    .map(|x| (k, x))
                    .ok_or_else(|| format_err(format!("metric {k:?} is not a number")))
            })
            .collect::<Result<_, _>>()?;
        if pairs.is_empty() {
            metric_columns = metrics.iter().map(|(k, _)| ((*k).clone(), Vec::new())).collect();
        }
        if metrics.len() != metric_columns.len() {
            return Err(format_err("metric columns differ from the first row".into()));
        }
        for (name, value) in metrics {
            metric_columns
                .get_mut(name)
                .ok_or_else(|| format_err(format!("unexpected metric {name:?}")))?
                .push(value);
        }
        pairs.push(EvalPair {
            id: text("id")?,
            reference: text("reference")?,
            prediction: text("prediction")?,
            human_score,
        });
    }
    if pairs.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    Ok(ScoredDataset {
        pairs,
        metric_columns,
        warnings: ScoreWarnings::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(id: &str, r: &str, p: &str) -> EvalPair {
        EvalPair {
            id: id.into(),
            reference: r.into(),
            prediction: p.into(),
            human_score: Some(0.5),
        }
    }

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_entries(
            2,
            [
                ("get", vec![1.0, 0.2]),
                ("count", vec![0.3, 1.0]),
                ("size", vec![0.4, 0.9]),
                ("copy", vec![2.0, 0.0]),
            ],
        )
        .unwrap()
    }

    fn config(metrics: &[Metric]) -> ScoreConfig {
        ScoreConfig {
            metrics: metrics.to_vec(),
            ..ScoreConfig::default()
        }
    }

    #[test]
    fn identity_scores_one() {
        let scored = score_dataset(
            &[pair("a", "getCount", "getCount")],
            Some(&table()),
            None,
            &config(&[Metric::Rouge1, Metric::Wrdscore, Metric::Greedy, Metric::Wmd]),
        )
        .unwrap();
        assert_eq!(scored.column("rouge1").unwrap(), [1.0]);
        assert!((scored.column("wrdscore").unwrap()[0] - 1.0).abs() < 1e-12);
        assert!((scored.column("greedy").unwrap()[0] - 1.0).abs() < 1e-12);
        assert!(scored.column("wmd").unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn rouge_without_embeddings() {
        let scored = score_dataset(&[pair("a", "copy", "clone")], None, None, &config(&[Metric::Rouge1])).unwrap();
        assert_eq!(scored.column("rouge1").unwrap(), [0.0]);
        assert!(matches!(
            score_dataset(&[pair("a", "copy", "clone")], None, None, &config(&[Metric::Wrdscore])),
            Err(EvalError::MissingEmbeddings(Metric::Wrdscore))
        ));
    }

    #[test]
    fn oov_pair_scores_zero() {
        let scored = score_dataset(
            &[pair("a", "getCount", "clone"), pair("b", "size", "count")],
            Some(&table()),
            None,
            &config(&[Metric::Rouge1, Metric::Wrdscore]),
        )
        .unwrap();
        assert_eq!(scored.column("wrdscore").unwrap()[0], 0.0);
        assert!(scored.column("wrdscore").unwrap()[1] > 0.0);
        assert_eq!(scored.warnings.oov_pairs, 1);
        assert_eq!(scored.warnings.oov_tokens, 1);
    }

    #[test]
    fn failures_are_collected() {
        let pairs = [pair("a", "___", "get"), pair("b", "get", "count")];
        let scored = score_dataset(&pairs, Some(&table()), None, &config(&[Metric::Rouge2, Metric::Wrdscore])).unwrap();
        // "___" has no tokens; rouge2 needs two reference tokens
        assert_eq!(scored.warnings.failures.len(), 2);
        assert_eq!(scored.warnings.failures[0].id, "a");
        assert_eq!(scored.warnings.failures[1].metric.as_deref(), Some("rouge2"));
        assert_eq!(scored.column("rouge2").unwrap(), [0.0, 0.0]);

        let err = score_dataset(&pairs[..1], Some(&table()), None, &config(&[Metric::Rouge1])).unwrap_err();
        assert!(matches!(err, EvalError::AllPairsFailed(_)));
        assert!(matches!(score_dataset(&[], None, None, &config(&[])), Err(EvalError::EmptyDataset)));
    }

    #[test]
    fn oov_error_policy_is_a_failure() {
        let cfg = ScoreConfig {
            oov_policy: OovPolicy::Error,
            ..config(&[Metric::Rouge1, Metric::Wrdscore])
        };
        let scored = score_dataset(&[pair("a", "getName", "getCount")], Some(&table()), None, &cfg).unwrap();
        assert_eq!(scored.warnings.failures.len(), 1);
        assert_eq!(scored.column("rouge1").unwrap(), [0.5]);
    }

    #[test]
    fn jsonl_roundtrip() {
        let scored = score_dataset(
            &[pair("a", "getCount", "size"), pair("b", "copy", "copy")],
            Some(&table()),
            None,
            &config(&[Metric::Wrdscore, Metric::Rouge1]),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_scored_jsonl(&scored, &mut buf).unwrap();
        let back = read_scored_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back.pairs, scored.pairs);
        assert_eq!(back.metric_columns, scored.metric_columns);
        assert_eq!(back.metric_columns.keys().collect::<Vec<_>>(), ["wrdscore", "rouge1"]);
    }

    #[test]
    fn csv_output_shape() {
        let scored = score_dataset(&[pair("a", "get", "get")], None, None, &config(&[Metric::Rouge1])).unwrap();
        let mut buf = Vec::new();
        write_scored_delimited(&scored, &mut buf, b',').unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "id,reference,prediction,human_score,rouge1\na,get,get,0.5,1.0000\n");
    }
}
