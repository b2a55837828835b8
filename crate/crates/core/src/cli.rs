//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 for data
//! and runtime errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::embedding::{
    compute_idf, embed_sequence, load_embeddings, EmbeddingError, EmbeddingTable, IdfTable, OovPolicy,
    WeightScheme,
};
use crate::eval::{
    evaluate, load_dataset, read_scored_jsonl, score_dataset, stratified_sample, write_scored_delimited,
    write_scored_jsonl, DatasetFormat, EvalPair, Metric, ScoreConfig, ScoredDataset,
};
use crate::metrics::{greedy_match_score, rouge_n, wmd_between, wrdscore};
use crate::tokenizer::split_identifier;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "wrdscore", version, about = "Optimal-transport scoring for method-name prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a single reference/prediction pair.
    Score {
        #[arg(long = "ref")]
        reference: String,
        #[arg(long = "pred")]
        prediction: String,
        #[command(flatten)]
        opts: MetricOpts,
    },
    /// Score every pair of a dataset.
    Batch {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        opts: MetricOpts,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Jsonl)]
        format: OutputFormat,
    },
    /// Compare metric scores with human judgments (MSE, MAE, t-tests).
    Evaluate {
        #[command(flatten)]
        input: ScoredInput,
        #[command(flatten)]
        opts: MetricOpts,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw the three stratified 50-pair annotation sets.
    Sample {
        #[command(flatten)]
        input: ScoredInput,
        #[command(flatten)]
        opts: MetricOpts,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Directory receiving set_1.txt, set_2.txt and set_3.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an IDF table from the references and predictions of a dataset.
    Idf {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct MetricOpts {
    /// word2vec text embedding file.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Metrics to compute, in output order (repeatable, comma-separated).
    #[arg(long = "metrics", value_delimiter = ',', action = ArgAction::Append)]
    pub metrics: Vec<Metric>,
    #[arg(long, default_value = "norm")]
    pub weights: WeightScheme,
    #[arg(long, default_value = "skip")]
    pub oov: OovPolicy,
    /// IDF table produced by the `idf` command.
    #[arg(long)]
    pub idf: Option<PathBuf>,
    /// Weight the greedy metric's averages by token weights.
    #[arg(long)]
    pub greedy_weighted: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ScoredInput {
    /// Raw dataset (JSONL, or TSV when the extension is .tsv).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output of `batch --format jsonl`.
    #[arg(long)]
    pub scored: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Jsonl,
    Csv,
    Tsv,
}

#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(e) | Self::Data(e) => write!(f, "{e:#}"),
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(anyhow!("{msg}"))
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        Self::Data(e)
    }
}

impl From<crate::eval::EvalError> for CliError {
    fn from(e: crate::eval::EvalError) -> Self {
        Self::Data(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

pub fn execute<W: Write>(command: Command, out: &mut W) -> CliResult<()> {
    match command {
        Command::Score {
            reference,
            prediction,
            opts,
        } => cmd_score(&reference, &prediction, &opts, out),
        Command::Batch {
            dataset,
            opts,
            out: path,
            format,
        } => cmd_batch(&dataset, &opts, path.as_deref(), format, out),
        Command::Evaluate { input, opts, out: path } => cmd_evaluate(&input, &opts, path.as_deref(), out),
        Command::Sample {
            input,
            opts,
            seed,
            out: dir,
        } => cmd_sample(&input, &opts, seed, &dir, out),
        Command::Idf { dataset, out: path } => cmd_idf(&dataset, path.as_deref(), out),
    }
}

fn metrics_or(opts: &MetricOpts, default: &[Metric]) -> Vec<Metric> {
    if opts.metrics.is_empty() {
        default.to_vec()
    } else {
        opts.metrics.clone()
    }
}

fn score_config(opts: &MetricOpts, metrics: Vec<Metric>) -> ScoreConfig {
    ScoreConfig {
        metrics,
        weight_scheme: opts.weights,
        oov_policy: opts.oov,
        greedy_weighted: opts.greedy_weighted,
    }
}

/// Loads the embedding table when any requested metric needs one.
fn embeddings_for(opts: &MetricOpts, metrics: &[Metric]) -> CliResult<Option<EmbeddingTable>> {
    let Some(needing) = metrics.iter().find(|m| m.needs_embeddings()) else {
        return Ok(None);
    };
    let path = opts
        .embeddings
        .as_ref()
        .ok_or_else(|| usage(format!("metric {needing} requires --embeddings")))?;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let table = load_embeddings(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    if !table.duplicates().is_empty() {
        eprintln!("warning: {} duplicate embedding rows ignored", table.duplicates().len());
    }
    Ok(Some(table))
}

fn load_idf(path: &Path) -> CliResult<IdfTable> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text).with_context(|| format!("parsing IDF table {}", path.display()))?)
}

fn dataset_format(path: &Path) -> DatasetFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("tsv") => DatasetFormat::Tsv,
        _ => DatasetFormat::Jsonl,
    }
}

fn read_dataset(path: &Path) -> CliResult<Vec<EvalPair>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(load_dataset(BufReader::new(file), dataset_format(path)).with_context(|| format!("reading {}", path.display()))?)
}

fn dataset_idf(pairs: &[EvalPair]) -> anyhow::Result<IdfTable> {
    let corpus = pairs
        .iter()
        .flat_map(|p| [&p.reference, &p.prediction])
        .filter_map(|s| split_identifier(s).ok())
        .collect::<Vec<_>>();
    Ok(compute_idf(&corpus)?)
}

/// IDF from `--idf`, or from the dataset itself when the scheme needs one.
fn idf_for(opts: &MetricOpts, metrics: &[Metric], pairs: &[EvalPair]) -> CliResult<Option<IdfTable>> {
    if let Some(path) = &opts.idf {
        return load_idf(path).map(Some);
    }
    if opts.weights.needs_idf() && metrics.iter().any(|m| m.needs_embeddings()) {
        return Ok(Some(dataset_idf(pairs)?));
    }
    Ok(None)
}

fn warn_counters(scored: &ScoredDataset) {
    let w = &scored.warnings;
    eprintln!(
        "warnings: oov_pairs={} oov_tokens={} failures={}",
        w.oov_pairs,
        w.oov_tokens,
        w.failures.len()
    );
    for f in &w.failures {
        match &f.metric {
            Some(m) => eprintln!("  {} [{m}]: {}", f.id, f.message),
            None => eprintln!("  {}: {}", f.id, f.message),
        }
    }
}

fn score_raw(pairs: &[EvalPair], opts: &MetricOpts, config: &ScoreConfig) -> CliResult<ScoredDataset> {
    let table = embeddings_for(opts, &config.metrics)?;
    let idf = idf_for(opts, &config.metrics, pairs)?;
    let scored = score_dataset(pairs, table.as_ref(), idf.as_ref(), config)?;
    warn_counters(&scored);
    Ok(scored)
}

pub fn cmd_score<W: Write>(reference: &str, prediction: &str, opts: &MetricOpts, out: &mut W) -> CliResult<()> {
    let metrics = metrics_or(opts, &[Metric::Wrdscore]);
    let table = embeddings_for(opts, &metrics)?;
    let uses_embeddings = table.is_some();
    if uses_embeddings && opts.weights.needs_idf() && opts.idf.is_none() {
        return Err(usage(format!("--weights {} requires --idf", opts.weights)));
    }
    let idf = opts.idf.as_deref().map(load_idf).transpose()?;

    let r = split_identifier(reference).context("reference")?;
    let p = split_identifier(prediction).context("prediction")?;

    let embedded = match &table {
        None => None,
        Some(table) => {
            let embed = |seq| embed_sequence(table, seq, opts.weights, idf.as_ref(), opts.oov);
            match (embed(&r), embed(&p)) {
                (Ok(re), Ok(pe)) => Some((re, pe)),
                (Err(EmbeddingError::AllTokensOov(s)), _) | (_, Err(EmbeddingError::AllTokensOov(s))) => {
                    eprintln!("warning: every token of {s} is out of vocabulary; embedding metrics are 0");
                    None
                }
                (Err(e), _) | (_, Err(e)) => return Err(anyhow::Error::from(e).into()),
            }
        }
    };

    let write = |out: &mut W, line: String| -> CliResult<()> {
        writeln!(out, "{line}").context("writing output")?;
        Ok(())
    };
    for metric in metrics {
        let name = metric.name();
        let line = match metric {
            Metric::Rouge1 | Metric::Rouge2 => {
                let n = if metric == Metric::Rouge1 { 1 } else { 2 };
                let v = rouge_n(std::slice::from_ref(&r), &p, n).context(name)?;
                format!("{name} {v:.4}")
            }
            Metric::Wmd => {
                let v = match &embedded {
                    Some((re, pe)) => wmd_between(re, pe).context(name)?,
                    None => 0.0,
                };
                format!("{name} {v:.4}")
            }
            Metric::Greedy | Metric::Wrdscore => {
                let s = match &embedded {
                    Some((re, pe)) if metric == Metric::Greedy => {
                        greedy_match_score(re, pe, opts.greedy_weighted).context(name)?
                    }
                    Some((re, pe)) => wrdscore(re, pe).context(name)?,
                    None => crate::metrics::ScoreTriple::new(0.0, 0.0),
                };
                format!("{name} {:.4} {:.4} {:.4}", s.precision, s.recall, s.f1)
            }
        };
        write(out, line)?;
    }
    Ok(())
}

pub fn cmd_batch<W: Write>(
    dataset: &Path,
    opts: &MetricOpts,
    path: Option<&Path>,
    format: OutputFormat,
    out: &mut W,
) -> CliResult<()> {
    let config = score_config(opts, metrics_or(opts, &[Metric::Rouge1, Metric::Wrdscore]));
    let pairs = read_dataset(dataset)?;
    let scored = score_raw(&pairs, opts, &config)?;

    let mut sink: Box<dyn Write + '_> = match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(&mut *out),
    };
    match format {
        OutputFormat::Jsonl => write_scored_jsonl(&scored, &mut sink),
        OutputFormat::Csv => write_scored_delimited(&scored, &mut sink, b','),
        OutputFormat::Tsv => write_scored_delimited(&scored, &mut sink, b'\t'),
    }
    .context("writing scored dataset")?;
    sink.flush().context("writing scored dataset")?;
    Ok(())
}

/// Loads a scored dataset from either a raw dataset (scoring it) or a
/// `batch` JSONL output.
fn scored_input(
    input: &ScoredInput,
    opts: &MetricOpts,
    default: &[Metric],
) -> CliResult<(ScoredDataset, ScoreConfig)> {
    if let Some(path) = &input.scored {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mut scored = read_scored_jsonl(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
        let metrics = if opts.metrics.is_empty() {
            scored
                .metric_columns
                .keys()
                .map(|k| k.parse::<Metric>().map_err(|e| anyhow!(e)))
                .collect::<anyhow::Result<Vec<_>>>()?
        } else {
            opts.metrics.clone()
        };
        let mut columns = indexmap::IndexMap::new();
        for m in &metrics {
            let values = scored
                .metric_columns
                .shift_remove(m.name())
                .ok_or_else(|| anyhow!("{} has no {m} column", path.display()))?;
            columns.insert(m.name().to_string(), values);
        }
        scored.metric_columns = columns;
        return Ok((scored, score_config(opts, metrics)));
    }
    let path = input.dataset.as_ref().expect("clap enforces one input");
    let config = score_config(opts, metrics_or(opts, default));
    let pairs = read_dataset(path)?;
    let scored = score_raw(&pairs, opts, &config)?;
    Ok((scored, config))
}

pub fn cmd_evaluate<W: Write>(
    input: &ScoredInput,
    opts: &MetricOpts,
    path: Option<&Path>,
    out: &mut W,
) -> CliResult<()> {
    let (scored, config) = scored_input(input, opts, &[Metric::Rouge1, Metric::Wrdscore])?;
    let report = evaluate(&scored, &config)?;
    if let Some(path) = path {
        let json = report.to_json().context("serializing report")?;
        fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    write!(out, "{}", report.render_table()).context("writing output")?;
    Ok(())
}

pub fn cmd_sample<W: Write>(
    input: &ScoredInput,
    opts: &MetricOpts,
    seed: u64,
    dir: &Path,
    out: &mut W,
) -> CliResult<()> {
    let (scored, _) = scored_input(input, opts, &[Metric::Rouge1, Metric::Wrdscore])?;
    writeln!(out, "seed {seed}").context("writing output")?;
    let sets = stratified_sample(&scored, seed)?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (k, ids) in sets.iter().enumerate() {
        let path = dir.join(format!("set_{}.txt", k + 1));
        let mut body = ids.join("\n");
        body.push('\n');
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        writeln!(out, "{} ({} ids)", path.display(), ids.len()).context("writing output")?;
    }
    Ok(())
}

pub fn cmd_idf<W: Write>(dataset: &Path, path: Option<&Path>, out: &mut W) -> CliResult<()> {
    let pairs = read_dataset(dataset)?;
    let idf = dataset_idf(&pairs)?;
    let json = serde_json::to_string_pretty(&idf).context("serializing IDF table")? + "\n";
    match path {
        Some(p) => fs::write(p, json).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(json.as_bytes()).context("writing output")?,
    }
    Ok(())
}
