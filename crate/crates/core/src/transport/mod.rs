//! Discrete optimal transport between two weighted point sets.
//!
//! [`solve_transport`] finds an exact optimal vertex of the transportation
//! polytope `{P >= 0 : P 1 = w_r, 1^T P = w_p}` with the transportation
//! simplex. [`brute_force_transport`] enumerates every basis of small
//! instances and is used to cross-check the solver.

mod brute;
mod cost;
mod simplex;

pub use brute::{brute_force_transport, BRUTE_FORCE_MAX};
pub use cost::{clamped_cosine, cosine_cost_matrix, euclidean_cost_matrix, CostKind, CostMatrix};
pub use simplex::solve_transport;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `|sum(w) - 1|` accepted by the solvers.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cost matrix is {rows}x{cols} but weights have lengths {n} and {m}")]
    ShapeMismatch { rows: usize, cols: usize, n: usize, m: usize },
    #[error("infeasible weights: {0}")]
    InfeasibleWeights(String),
    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),
    #[error("empty point set")]
    Empty,
    #[error("brute force supports at most {max}x{max}, got {n}x{m}")]
    TooLarge { n: usize, m: usize, max: usize },
    #[error("transportation simplex did not converge within {0} pivots")]
    NotConverged(usize),
}

/// A feasible coupling of two marginals together with its cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
    row_marginals: Vec<f64>,
    col_marginals: Vec<f64>,
    cost: f64,
}

impl TransportPlan {
    pub(crate) fn from_flows(
        matrix: Vec<f64>,
        w_r: &[f64],
        w_p: &[f64],
        cost: &CostMatrix,
    ) -> Self {
        let total = matrix
            .iter()
            .zip(cost.values())
            .map(|(x, c)| x * c)
            .sum();
        Self {
            rows: w_r.len(),
            cols: w_p.len(),
            matrix,
            row_marginals: w_r.to_vec(),
            col_marginals: w_p.to_vec(),
            cost: total,
        }
    }

    /// The product coupling `w_r ⊗ w_p`.
    pub fn independent(w_r: &[f64], w_p: &[f64], cost: &CostMatrix) -> Result<Self, TransportError> {
        validate(w_r, w_p, cost)?;
        let matrix = w_r
            .iter()
            .flat_map(|a| w_p.iter().map(move |b| a * b))
            .collect();
        Ok(Self::from_flows(matrix, w_r, w_p, cost))
    }

    /// The north-west-corner plan, a feasible but generally suboptimal vertex.
    pub fn north_west_corner(w_r: &[f64], w_p: &[f64], cost: &CostMatrix) -> Result<Self, TransportError> {
        validate(w_r, w_p, cost)?;
        let (n, m) = (w_r.len(), w_p.len());
        let mut matrix = vec![0.0; n * m];
        let (mut i, mut j) = (0, 0);
        let (mut supply, mut demand) = (w_r[0], w_p[0]);
        loop {
            let x = supply.min(demand);
            matrix[i * m + j] = x;
            supply -= x;
            demand -= x;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if (supply <= demand && i < n - 1) || j == m - 1 {
                i += 1;
                supply = w_r[i];
            } else {
                j += 1;
                demand = w_p[j];
            }
        }
        Ok(Self::from_flows(matrix, w_r, w_p, cost))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.cols + j]
    }

    /// Row-major flow matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.matrix.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn row_marginals(&self) -> &[f64] {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &[f64] {
        &self.col_marginals
    }

    /// `sum_ij P_ij * d_ij`.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// Largest absolute deviation of any row or column sum from its marginal.
    pub fn marginal_violation(&self) -> f64 {
        let rows = self
            .row_sums()
            .into_iter()
            .zip(&self.row_marginals)
            .map(|(s, w)| (s - w).abs());
        let cols = self
            .col_sums()
            .into_iter()
            .zip(&self.col_marginals)
            .map(|(s, w)| (s - w).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.matrix.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn validate(w_r: &[f64], w_p: &[f64], cost: &CostMatrix) -> Result<(), TransportError> {
    if w_r.is_empty() || w_p.is_empty() {
        return Err(TransportError::Empty);
    }
    if cost.rows() != w_r.len() || cost.cols() != w_p.len() {
        return Err(TransportError::ShapeMismatch {
            rows: cost.rows(),
            cols: cost.cols(),
            n: w_r.len(),
            m: w_p.len(),
        });
    }
    for (name, w) in [("reference", w_r), ("predicted", w_p)] {
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(TransportError::InfeasibleWeights(format!(
                "{name} weights must be finite and nonnegative"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(TransportError::InfeasibleWeights(format!(
                "{name} weights sum to {sum}"
            )));
        }
    }
    Ok(())
}
