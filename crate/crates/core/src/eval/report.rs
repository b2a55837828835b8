use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{improvement, DeviationStats, ScoreConfig, ScoreWarnings, ScoredDataset, TTest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub metric_a: String,
    pub metric_b: String,
    #[serde(flatten)]
    pub test: TTest,
}

type Row = (&'static str, fn(&DeviationStats) -> f64);

/// Machine-readable evaluation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ScoreConfig,
    pub ids: Vec<String>,
    pub columns: IndexMap<String, Vec<f64>>,
    pub stats: IndexMap<String, DeviationStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub significance: Vec<SignificanceResult>,
    pub warnings: ScoreWarnings,
}

pub fn render_report(
    scored: &ScoredDataset,
    stats: IndexMap<String, DeviationStats>,
    tests: Vec<SignificanceResult>,
    config: &ScoreConfig,
) -> Report {
    Report {
        config: config.clone(),
        ids: scored.pairs.iter().map(|p| p.id.clone()).collect(),
        columns: scored.metric_columns.clone(),
        stats,
        significance: tests,
        warnings: scored.warnings.clone(),
    }
}

impl Report {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Plain-text table: one column per metric, MSE and MAE rows, plus the
    /// relative improvement of every metric over the first one.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let names: Vec<&String> = self.stats.keys().collect();
        let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max(8) + 2;
        let count = self.stats.values().next().map_or(0, |s| s.count);

        let _ = writeln!(out, "Mean deviation from human scores (n = {count})");
        let _ = write!(out, "{:<12}", "");
        for name in &names {
            let _ = write!(out, "{name:>width$}");
        }
        out.push('\n');
        let rows: [Row; 2] = [("MSE", |s| s.mse), ("MAE", |s| s.mae)];
        for (label, get) in rows {
            let _ = write!(out, "{label:<12}");
            for stats in self.stats.values() {
                let _ = write!(out, "{:>width$.4}", get(stats));
            }
            out.push('\n');
        }
        if let Some((baseline_name, baseline)) = self.stats.first() {
            if self.stats.len() > 1 {
                for (label, get) in rows {
                    let _ = write!(out, "{:<12}", format!("{label} gain %"));
                    for stats in self.stats.values() {
                        match improvement(get(baseline), get(stats)) {
                            Ok(pct) => {
                                let _ = write!(out, "{pct:>width$.2}");
                            }
                            Err(_) => {
                                let _ = write!(out, "{:>width$}", "-");
                            }
                        }
                    }
                    out.push('\n');
                }
                let _ = writeln!(out, "(gain relative to {baseline_name})");
            }
        }

        if !self.significance.is_empty() {
            let _ = writeln!(out, "\nWelch t-tests on per-pair absolute errors");
            for s in &self.significance {
                let _ = writeln!(
                    out,
                    "  {} vs {}: t = {:.4}, df = {:.2}, p = {:.4e}",
                    s.metric_a, s.metric_b, s.test.t, s.test.df, s.test.p_value
                );
            }
        }

        let w = &self.warnings;
        if w.oov_pairs > 0 || w.oov_tokens > 0 || !w.failures.is_empty() {
            let _ = writeln!(
                out,
                "\nwarnings: {} out-of-vocabulary pairs, {} skipped tokens, {} failures",
                w.oov_pairs,
                w.oov_tokens,
                w.failures.len()
            );
        }
        out
    }
}
