use std::collections::HashSet;
use std::io::{BufRead, Read};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// A reference/prediction pair, optionally with an averaged human judgment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub id: String,
    pub reference: String,
    pub prediction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Jsonl,
    Tsv,
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(Self::Jsonl),
            "tsv" => Ok(Self::Tsv),
            other => Err(format!("unknown dataset format {other:?}")),
        }
    }
}

#[derive(Deserialize)]
struct JsonRow {
    reference: String,
    prediction: String,
    #[serde(default)]
    human_score: Option<f64>,
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    annotator_scores: Option<Vec<f64>>,
}

fn auto_id(index: usize) -> String {
    format!("{index:06}")
}

/// Resolves the human score from an explicit value or per-annotator scores.
fn human_score(line: usize, explicit: Option<f64>, annotators: &[f64]) -> Result<Option<f64>, EvalError> {
    let err = |message: String| EvalError::Format { line, message };
    let check = |x: f64| {
        if (0.0..=1.0).contains(&x) {
            Ok(x)
        } else {
            Err(err(format!("score {x} outside [0, 1]")))
        }
    };
    match (explicit, annotators) {
        (Some(_), [_, ..]) => Err(err("both human_score and annotator scores given".into())),
        (Some(x), []) => check(x).map(Some),
        (None, []) => Ok(None),
        (None, scores) => {
            for &s in scores {
                check(s)?;
            }
            Ok(Some(scores.iter().sum::<f64>() / scores.len() as f64))
        }
    }
}

/// Loads evaluation pairs.
///
/// JSONL rows carry `reference`, `prediction` and optionally `human_score`,
/// `id` and `annotator_scores` (averaged into the human score). TSV input
/// needs a header whose first two columns are `reference` and `prediction`;
/// `human_score`, `id` and `annotator*` columns are recognized by name.
/// Missing ids become the zero-padded row index.
pub fn load_dataset<R: Read>(source: R, format: DatasetFormat) -> Result<Vec<EvalPair>, EvalError> {
    let pairs = match format {
        DatasetFormat::Jsonl => load_jsonl(std::io::BufReader::new(source))?,
        DatasetFormat::Tsv => load_tsv(source)?,
    };
    let mut seen = HashSet::new();
    for pair in &pairs {
        if !seen.insert(pair.id.as_str()) {
            return Err(EvalError::DuplicateId(pair.id.clone()));
        }
    }
    Ok(pairs)
}

fn load_jsonl<R: BufRead>(reader: R) -> Result<Vec<EvalPair>, EvalError> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(&line).map_err(|e| EvalError::Format {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let annotators = row.annotator_scores.unwrap_or_default();
        pairs.push(EvalPair {
            id: row.id.unwrap_or_else(|| auto_id(idx)),
            human_score: human_score(idx + 1, row.human_score, &annotators)?,
            reference: row.reference,
            prediction: row.prediction,
        });
    }
    Ok(pairs)
}

fn load_tsv<R: Read>(source: R) -> Result<Vec<EvalPair>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .quoting(false)
        .flexible(true)
        .from_reader(source);
    let mut records = reader.records();

    let header = match records.next() {
        Some(rec) => rec?,
        None => {
            return Err(EvalError::Format {
                line: 1,
                message: "missing header row".into(),
            })
        }
    };
    let names: Vec<String> = header.iter().map(|h| h.trim().to_lowercase()).collect();
    if names.len() < 2 || names[0] != "reference" || names[1] != "prediction" {
        return Err(EvalError::Format {
            line: 1,
            message: "header must start with reference<TAB>prediction".into(),
        });
    }
    let score_col = names.iter().position(|n| n == "human_score");
    let id_col = names.iter().position(|n| n == "id");
    let annotator_cols: Vec<usize> = names
        .iter()
        .enumerate()
        .filter(|(_, n)| n.starts_with("annotator"))
        .map(|(i, _)| i)
        .collect();

    let mut pairs = Vec::new();
    for (index, record) in records.enumerate() {
        let record = record?;
        let line = record.position().map_or(index + 2, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let format_err = |message: String| EvalError::Format { line, message };
        if record.len() != names.len() {
            return Err(format_err(format!("expected {} columns, found {}", names.len(), record.len())));
        }
        let number = |col: usize| -> Result<Option<f64>, EvalError> {
            let field = record[col].trim();
            if field.is_empty() {
                return Ok(None);
            }
            field
                .parse::<f64>()
                .map(Some)
                .map_err(|_| format_err(format!("invalid number {field:?}")))
        };
        let explicit = score_col.map(number).transpose()?.flatten();
        let annotators = annotator_cols
            .iter()
            .map(|&c| number(c))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect::<Vec<f64>>();
        let id = id_col
            .map(|c| record[c].trim().to_string())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| auto_id(index));
        pairs.push(EvalPair {
            id,
            reference: record[0].to_string(),
            prediction: record[1].to_string(),
            human_score: human_score(line, explicit, &annotators)?,
        });
    }
    Ok(pairs)
}
