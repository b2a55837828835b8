use serde::{Deserialize, Serialize};

use super::TransportError;
use crate::embedding::WeightedEmbeddingSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Cosine,
    Euclidean,
    Custom,
}

/// Dense `rows x cols` ground-cost matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    kind: CostKind,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, kind: CostKind) -> Result<Self, TransportError> {
        if rows == 0 || cols == 0 {
            return Err(TransportError::Empty);
        }
        if values.len() != rows * cols {
            return Err(TransportError::InvalidCost(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if values.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(TransportError::InvalidCost(
                "entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { rows, cols, values, kind })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TransportError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(TransportError::InvalidCost("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat(), CostKind::Custom)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> Self {
        let values = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Self {
            rows: self.cols,
            cols: self.rows,
            values,
            kind: self.kind,
        }
    }
}

/// Cosine similarity of two unit vectors, clamped to `[0, 1]`.
#[inline]
pub fn clamped_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot.clamp(0.0, 1.0)
}

/// `d_ij = 1 - clamp(r_i . p_j, 0, 1)` over unit vectors.
pub fn cosine_cost_matrix(
    r: &WeightedEmbeddingSequence,
    p: &WeightedEmbeddingSequence,
) -> Result<CostMatrix, TransportError> {
    if r.dimension() != p.dimension() {
        return Err(TransportError::DimensionMismatch(r.dimension(), p.dimension()));
    }
    let values = r
        .vectors()
        .iter()
        .flat_map(|ri| p.vectors().iter().map(move |pj| 1.0 - clamped_cosine(ri, pj)))
        .collect();
    CostMatrix::new(r.len(), p.len(), values, CostKind::Cosine)
}

/// `d_ij = ||r_i - p_j||_2` over raw vectors.
pub fn euclidean_cost_matrix(r: &[Vec<f64>], p: &[Vec<f64>]) -> Result<CostMatrix, TransportError> {
    let dim = r.first().ok_or(TransportError::Empty)?.len();
    if p.is_empty() {
        return Err(TransportError::Empty);
    }
    if let Some(bad) = r.iter().chain(p).find(|v| v.len() != dim) {
        return Err(TransportError::DimensionMismatch(dim, bad.len()));
    }
    let values = r
        .iter()
        .flat_map(|ri| {
            p.iter().map(move |pj| {
                ri.iter()
                    .zip(pj)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
        })
        .collect();
    CostMatrix::new(r.len(), p.len(), values, CostKind::Euclidean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single(v: Vec<f64>) -> WeightedEmbeddingSequence {
        WeightedEmbeddingSequence::uniform(vec![v]).unwrap()
    }

    #[test]
    fn cosine_costs() {
        let e1 = single(vec![1.0, 0.0]);
        let e2 = single(vec![0.0, 1.0]);
        let neg = single(vec![-1.0, 0.0]);
        assert_eq!(cosine_cost_matrix(&e1, &e1).unwrap().values(), [0.0]);
        assert_eq!(cosine_cost_matrix(&e1, &e2).unwrap().values(), [1.0]);
        assert_eq!(cosine_cost_matrix(&e1, &neg).unwrap().values(), [1.0]);
        let wide = single(vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            cosine_cost_matrix(&e1, &wide),
            Err(TransportError::DimensionMismatch(2, 3))
        ));
    }

    #[test]
    fn euclidean_costs() {
        let c = euclidean_cost_matrix(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap();
        assert_eq!(c.values(), [5.0]);
        let c = euclidean_cost_matrix(&[vec![1.0, 1.0]], &[vec![1.0, 1.0]]).unwrap();
        assert_eq!(c.values(), [0.0]);
        let c = euclidean_cost_matrix(&[vec![1.0, 0.0]], &[vec![0.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(c.values()[0], 2f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(
            euclidean_cost_matrix(&[vec![1.0]], &[vec![0.0, 1.0]]),
            Err(TransportError::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(CostMatrix::from_rows(&[vec![-0.1]]).is_err());
        assert!(CostMatrix::from_rows(&[vec![0.1], vec![0.1, 0.2]]).is_err());
        assert!(CostMatrix::from_rows(&[]).is_err());
        assert!(CostMatrix::new(2, 2, vec![0.0; 3], CostKind::Custom).is_err());
    }

    #[test]
    fn transpose() {
        let c = CostMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let t = c.transpose();
        assert_eq!((t.rows(), t.cols()), (3, 2));
        assert_eq!(t.values(), [1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }
}
