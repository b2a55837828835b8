//! Token embeddings and importance weights.
//!
//! Tables are read from the word2vec text format. Before scoring, each
//! token's raw vector is split into a unit direction and a weight; weights
//! come from the raw norm, a TF-IDF score, or their product, and are
//! renormalized onto the probability simplex.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::TokenSequence;

const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("embedding table has no entries")]
    EmptyTable,
    #[error("IDF corpus is empty")]
    EmptyCorpus,
    #[error("every token of {0} is out of vocabulary")]
    AllTokensOov(String),
    #[error("token {0:?} is out of vocabulary")]
    OovToken(String),
    #[error("token {0:?} has a zero embedding vector")]
    ZeroVector(String),
    #[error("weight scheme {0} needs an IDF table")]
    MissingIdf(WeightScheme),
    #[error("invalid weighted sequence: {0}")]
    InvalidSequence(String),
    #[error("vector dimension {found} does not match table dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Token -> raw (unnormalized) vector, all of one dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
    duplicates: Vec<String>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            entries: HashMap::new(),
            duplicates: Vec::new(),
        }
    }

    /// Builds a table from `(token, vector)` pairs; first occurrence wins.
    pub fn from_entries<I, S>(dimension: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = Self::new(dimension);
        for (token, vector) in entries {
            table.insert(token.into(), vector)?;
        }
        Ok(table)
    }

    /// Inserts an entry. Returns `false` (and records the token) if it was
    /// already present, in which case the existing vector is kept.
    pub fn insert(&mut self, token: String, vector: Vec<f64>) -> Result<bool, EmbeddingError> {
        if vector.len() != self.dimension {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dimension,
                found: vector.len(),
            });
        }
        let token = token.to_lowercase();
        if self.entries.contains_key(&token) {
            self.duplicates.push(token);
            return Ok(false);
        }
        self.entries.insert(token, vector);
        Ok(true)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    /// Tokens that appeared more than once while building the table.
    pub fn duplicates(&self) -> &[String] {
        &self.duplicates
    }

    /// Returns a copy with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dimension: self.dimension,
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|x| x * factor).collect()))
                .collect(),
            duplicates: self.duplicates.clone(),
        }
    }
}

/// Parses a word2vec text file: a `<vocab_size> <dimension>` header followed
/// by one `token v1 ... vd` row per entry.
pub fn load_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingTable, EmbeddingError> {
    let mut lines = reader.lines().enumerate();
    let (vocab_size, dimension) = loop {
        let Some((idx, line)) = lines.next() else {
            return Err(EmbeddingError::EmptyTable);
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        break parse_header(&line).map_err(|message| EmbeddingError::Format {
            line: idx + 1,
            message,
        })?;
    };
    if vocab_size == 0 {
        return Err(EmbeddingError::EmptyTable);
    }

    let mut table = EmbeddingTable::new(dimension);
    let mut rows = 0usize;
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let format_err = |message: String| EmbeddingError::Format {
            line: idx + 1,
            message,
        };
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap_or_default();
        let vector = fields
            .map(|f| {
                f64::from_str(f).map_err(|_| format_err(format!("invalid number {f:?}")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if vector.len() != dimension {
            return Err(format_err(format!(
                "expected {dimension} values for {token:?}, found {}",
                vector.len()
            )));
        }
        if !table.insert(token.to_string(), vector)? {
            log::warn!("duplicate embedding for {token:?} on line {}; keeping the first", idx + 1);
        }
        rows += 1;
    }
    if rows != vocab_size {
        return Err(EmbeddingError::Format {
            line: 1,
            message: format!("header declares {vocab_size} rows, found {rows}"),
        });
    }
    if table.is_empty() {
        return Err(EmbeddingError::EmptyTable);
    }
    Ok(table)
}

fn parse_header(line: &str) -> Result<(usize, usize), String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let [vocab, dim] = fields.as_slice() else {
        return Err(format!("malformed header {line:?}"));
    };
    let vocab = vocab
        .parse::<usize>()
        .map_err(|_| format!("invalid vocabulary size {vocab:?}"))?;
    let dim = dim
        .parse::<usize>()
        .map_err(|_| format!("invalid dimension {dim:?}"))?;
    if dim == 0 {
        return Err("dimension must be positive".into());
    }
    Ok((vocab, dim))
}

/// Smoothed inverse document frequencies: `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    document_count: usize,
    idf: BTreeMap<String, f64>,
}

impl IdfTable {
    pub fn document_count(&self) -> usize {
        self.document_count
    }

    /// IDF of `token`; tokens never seen in the corpus get the df = 0 value.
    pub fn idf(&self, token: &str) -> f64 {
        self.idf
            .get(token)
            .copied()
            .unwrap_or_else(|| smoothed_idf(self.document_count, 0))
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.idf.get(token).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.idf.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

fn smoothed_idf(documents: usize, df: usize) -> f64 {
    ((1.0 + documents as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Each sequence in `corpus` counts as one document.
pub fn compute_idf(corpus: &[TokenSequence]) -> Result<IdfTable, EmbeddingError> {
    if corpus.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        let mut seen: Vec<&str> = doc.iter().collect();
        seen.sort_unstable();
        seen.dedup();
        for token in seen {
            *df.entry(token).or_default() += 1;
        }
    }
    let idf = df
        .into_iter()
        .map(|(token, count)| (token.to_string(), smoothed_idf(corpus.len(), count)))
        .collect();
    Ok(IdfTable {
        document_count: corpus.len(),
        idf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    Uniform,
    #[default]
    Norm,
    Tfidf,
    NormTfidf,
}

impl WeightScheme {
    pub fn needs_idf(self) -> bool {
        matches!(self, Self::Tfidf | Self::NormTfidf)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Norm => "norm",
            Self::Tfidf => "tfidf",
            Self::NormTfidf => "norm_tfidf",
        }
    }
}

impl std::fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "norm" => Ok(Self::Norm),
            "tfidf" => Ok(Self::Tfidf),
            "norm_tfidf" => Ok(Self::NormTfidf),
            other => Err(format!("unknown weight scheme {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OovPolicy {
    #[default]
    Skip,
    Error,
}

impl FromStr for OovPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skip" => Ok(Self::Skip),
            "error" => Ok(Self::Error),
            other => Err(format!("unknown OOV policy {other:?}")),
        }
    }
}

/// Unit vectors with simplex weights, one per embedded token.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEmbeddingSequence {
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
    norms: Vec<f64>,
    weights: Vec<f64>,
    skipped: Vec<String>,
}

impl WeightedEmbeddingSequence {
    /// Builds a sequence from unit vectors and simplex weights, validating
    /// both. Tokens are synthesized as `t0, t1, ...`.
    pub fn new(vectors: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, EmbeddingError> {
        let tokens = (0..vectors.len()).map(|i| format!("t{i}")).collect();
        Self::with_tokens(tokens, vectors, weights)
    }

    /// Uniform weights over `vectors`.
    pub fn uniform(vectors: Vec<Vec<f64>>) -> Result<Self, EmbeddingError> {
        let n = vectors.len().max(1);
        let weights = vec![1.0 / n as f64; vectors.len()];
        Self::new(vectors, weights)
    }

    pub fn with_tokens(
        tokens: Vec<String>,
        vectors: Vec<Vec<f64>>,
        weights: Vec<f64>,
    ) -> Result<Self, EmbeddingError> {
        let invalid = |m: String| EmbeddingError::InvalidSequence(m);
        if vectors.is_empty() {
            return Err(invalid("sequence is empty".into()));
        }
        if vectors.len() != weights.len() || vectors.len() != tokens.len() {
            return Err(invalid(format!(
                "{} tokens, {} vectors, {} weights",
                tokens.len(),
                vectors.len(),
                weights.len()
            )));
        }
        let dim = vectors[0].len();
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(invalid("vectors have differing dimensions".into()));
        }
        for v in &vectors {
            let norm = l2_norm(v);
            if (norm - 1.0).abs() > UNIT_TOLERANCE {
                return Err(invalid(format!("vector norm {norm} is not 1")));
            }
        }
        check_simplex(&weights).map_err(invalid)?;
        Ok(Self {
            norms: vec![1.0; vectors.len()],
            tokens,
            vectors,
            weights,
            skipped: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Norms of the raw table vectors the unit vectors were derived from.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// The original unnormalized vectors (`unit * norm`).
    pub fn raw_vectors(&self) -> Vec<Vec<f64>> {
        self.vectors
            .iter()
            .zip(&self.norms)
            .map(|(v, n)| v.iter().map(|x| x * n).collect())
            .collect()
    }

    /// Tokens dropped as out-of-vocabulary.
    pub fn skipped(&self) -> &[String] {
        &self.skipped
    }

    /// Returns the sequence with tokens reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let pick = |xs: &[f64]| order.iter().map(|&i| xs[i]).collect::<Vec<_>>();
        Self {
            tokens: order.iter().map(|&i| self.tokens[i].clone()).collect(),
            vectors: order.iter().map(|&i| self.vectors[i].clone()).collect(),
            norms: pick(&self.norms),
            weights: pick(&self.weights),
            skipped: self.skipped.clone(),
        }
    }
}

fn check_simplex(weights: &[f64]) -> Result<(), String> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err("weights must be finite and nonnegative".into());
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > UNIT_TOLERANCE {
        return Err(format!("weights sum to {sum}, not 1"));
    }
    Ok(())
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Looks up each token of `seq`, normalizes its vector and assigns a simplex
/// weight according to `scheme`.
pub fn embed_sequence(
    table: &EmbeddingTable,
    seq: &TokenSequence,
    scheme: WeightScheme,
    idf: Option<&IdfTable>,
    oov: OovPolicy,
) -> Result<WeightedEmbeddingSequence, EmbeddingError> {
    let idf = match (scheme.needs_idf(), idf) {
        (true, None) => return Err(EmbeddingError::MissingIdf(scheme)),
        (_, idf) => idf,
    };

    let mut tf: HashMap<&str, usize> = HashMap::new();
    for token in seq.iter() {
        *tf.entry(token).or_default() += 1;
    }

    let mut tokens = Vec::with_capacity(seq.len());
    let mut vectors = Vec::with_capacity(seq.len());
    let mut norms = Vec::with_capacity(seq.len());
    let mut weights = Vec::with_capacity(seq.len());
    let mut skipped = Vec::new();

    for token in seq.iter() {
        let Some(raw) = table.get(token) else {
            match oov {
                OovPolicy::Skip => {
                    skipped.push(token.to_string());
                    continue;
                }
                OovPolicy::Error => return Err(EmbeddingError::OovToken(token.to_string())),
            }
        };
        let norm = l2_norm(raw);
        if norm == 0.0 || !norm.is_finite() {
            return Err(EmbeddingError::ZeroVector(token.to_string()));
        }
        let tfidf = || tf[token] as f64 * idf.map_or(1.0, |t| t.idf(token));
        let weight = match scheme {
            WeightScheme::Uniform => 1.0,
            WeightScheme::Norm => norm,
            WeightScheme::Tfidf => tfidf(),
            WeightScheme::NormTfidf => norm * tfidf(),
        };
        tokens.push(token.to_string());
        vectors.push(raw.iter().map(|x| x / norm).collect::<Vec<f64>>());
        norms.push(norm);
        weights.push(weight);
    }

    if vectors.is_empty() {
        return Err(EmbeddingError::AllTokensOov(seq.to_string()));
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        let uniform = 1.0 / weights.len() as f64;
        weights.iter_mut().for_each(|w| *w = uniform);
    }

    Ok(WeightedEmbeddingSequence {
        tokens,
        vectors,
        norms,
        weights,
        skipped,
    })
}
