//! Exhaustive vertex enumeration for tiny transportation problems.
//!
//! Every basic solution corresponds to a spanning tree of `K_{n,m}`. This
//! enumerates all `(n + m - 1)`-subsets of cells, keeps the spanning trees,
//! solves each basis with dense Gaussian elimination and returns the cheapest
//! nonnegative one. Exponential, so limited to 3x3.

use super::{validate, CostMatrix, TransportError, TransportPlan};

pub const BRUTE_FORCE_MAX: usize = 3;

pub fn brute_force_transport(w_r: &[f64], w_p: &[f64], cost: &CostMatrix) -> Result<TransportPlan, TransportError> {
    let (n, m) = (w_r.len(), w_p.len());
    if n > BRUTE_FORCE_MAX || m > BRUTE_FORCE_MAX {
        return Err(TransportError::TooLarge { n, m, max: BRUTE_FORCE_MAX });
    }
    validate(w_r, w_p, cost)?;

    let cells = n * m;
    let size = n + m - 1;
    let mut best: Option<TransportPlan> = None;
    for mask in 0u32..(1 << cells) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let chosen: Vec<usize> = (0..cells).filter(|k| mask & (1 << k) != 0).collect();
        if !is_spanning_tree(&chosen, n, m) {
            continue;
        }
        let Some(values) = solve_basis(&chosen, w_r, w_p) else {
            continue;
        };
        if values.iter().any(|&x| x < -1e-12) {
            continue;
        }
        let mut flows = vec![0.0; cells];
        for (&k, &x) in chosen.iter().zip(&values) {
            flows[k] = x.max(0.0);
        }
        let plan = TransportPlan::from_flows(flows, w_r, w_p, cost);
        if best.as_ref().is_none_or(|b| plan.cost() < b.cost()) {
            best = Some(plan);
        }
    }
    Ok(best.expect("the north-west-corner basis is always feasible"))
}

fn is_spanning_tree(cells: &[usize], n: usize, m: usize) -> bool {
    let mut parent: Vec<usize> = (0..n + m).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        parent[x] = root;
        root
    }
    for &k in cells {
        let (a, b) = (find(&mut parent, k / m), find(&mut parent, n + k % m));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    // n + m - 1 acyclic edges on n + m nodes
    true
}

/// Solves the marginal equations restricted to `cells`, dropping the last
/// (redundant) column equation.
fn solve_basis(cells: &[usize], w_r: &[f64], w_p: &[f64]) -> Option<Vec<f64>> {
    let (n, m) = (w_r.len(), w_p.len());
    let k = cells.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (col, &cell) in cells.iter().enumerate() {
        let (i, j) = (cell / m, cell % m);
        a[i][col] = 1.0;
        if j < m - 1 {
            a[n + j][col] = 1.0;
        }
    }
    for (i, &w) in w_r.iter().enumerate() {
        a[i][k] = w;
    }
    for (j, &w) in w_p.iter().take(m - 1).enumerate() {
        a[n + j][k] = w;
    }

    for col in 0..k {
        let pivot = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..k {
            if row != col && a[row][col] != 0.0 {
                let factor = a[row][col] / a[col][col];
                for c in col..=k {
                    a[row][c] -= factor * a[col][c];
                }
            }
        }
    }
    Some((0..k).map(|r| a[r][k] / a[r][r]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reference_instances() {
        let c = CostMatrix::from_rows(&[vec![0.2, 0.5]]).unwrap();
        assert_abs_diff_eq!(brute_force_transport(&[1.0], &[0.4, 0.6], &c).unwrap().cost(), 0.38, epsilon = 1e-12);

        let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(brute_force_transport(&[0.5, 0.5], &[0.5, 0.5], &c).unwrap().cost(), 0.0, epsilon = 1e-12);

        let c = CostMatrix::from_rows(&[vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        let plan = brute_force_transport(&[0.3, 0.7], &[0.5, 0.5], &c).unwrap();
        assert_abs_diff_eq!(plan.cost(), 0.38, epsilon = 1e-12);
        assert_abs_diff_eq!(plan.get(1, 0), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn single_cell() {
        for c in [0.0, 0.25, 7.5] {
            let cost = CostMatrix::from_rows(&[vec![c]]).unwrap();
            assert_eq!(brute_force_transport(&[1.0], &[1.0], &cost).unwrap().cost(), c);
        }
    }

    #[test]
    fn too_large() {
        let cost = CostMatrix::new(4, 1, vec![0.0; 4], crate::transport::CostKind::Custom).unwrap();
        assert!(matches!(
            brute_force_transport(&[0.25; 4], &[1.0], &cost),
            Err(TransportError::TooLarge { n: 4, m: 1, .. })
        ));
    }
}
