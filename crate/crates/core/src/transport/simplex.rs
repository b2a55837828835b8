//! Transportation simplex on the bipartite supply/demand graph.
//!
//! A basis is a spanning tree of `K_{n,m}` with `n + m - 1` cells. Each pivot
//! computes dual potentials along the tree, picks the cell with the most
//! negative reduced cost, and pushes flow around the unique cycle it closes.
//! Supplies are perturbed by `EPSILON` (and the last demand by `n * EPSILON`)
//! so every basis is nondegenerate and Dantzig's rule cannot cycle; the final
//! basis is then re-solved against the exact marginals.

use std::collections::VecDeque;

use super::{validate, CostMatrix, TransportError, TransportPlan};

const EPSILON: f64 = 1e-12;

/// Solves `min sum_ij P_ij d_ij` subject to `P 1 = w_r`, `1^T P = w_p`,
/// `P >= 0`, returning an optimal basic solution.
pub fn solve_transport(w_r: &[f64], w_p: &[f64], cost: &CostMatrix) -> Result<TransportPlan, TransportError> {
    validate(w_r, w_p, cost)?;
    let (n, m) = (w_r.len(), w_p.len());

    let supply: Vec<f64> = w_r.iter().map(|w| w + EPSILON).collect();
    let mut demand = w_p.to_vec();
    demand[m - 1] += n as f64 * EPSILON;
    // absorb rounding so both sides carry the same total
    let imbalance = supply.iter().sum::<f64>() - demand.iter().sum::<f64>();
    demand[m - 1] += imbalance;

    let mut basis = Basis::north_west_corner(&supply, &demand);
    let scale = cost.values().iter().copied().fold(1.0, f64::max);
    let tolerance = 1e-12 * scale;
    let max_pivots = 1000 + 50 * n * m;

    let mut pivots = 0;
    loop {
        let (u, v) = basis.potentials(cost);
        let mut entering = None;
        let mut best = -tolerance;
        for i in 0..n {
            for j in 0..m {
                if basis.is_basic(i, j) {
                    continue;
                }
                let reduced = cost.get(i, j) - u[i] - v[j];
                if reduced < best {
                    best = reduced;
                    entering = Some((i, j));
                }
            }
        }
        let Some((i, j)) = entering else { break };
        if pivots == max_pivots {
            return Err(TransportError::NotConverged(max_pivots));
        }
        basis.pivot(i, j);
        pivots += 1;
    }
    log::trace!("transport {n}x{m} solved in {pivots} pivots");

    let mut flows = basis.tree_flows(w_r, w_p);
    for x in &mut flows {
        if *x < 0.0 {
            debug_assert!(*x > -1e-9, "basis infeasible for exact marginals: {x}");
            *x = 0.0;
        }
    }
    Ok(TransportPlan::from_flows(flows, w_r, w_p, cost))
}

struct Basis {
    n: usize,
    m: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    basic: Vec<bool>,
}

impl Basis {
    fn north_west_corner(supply: &[f64], demand: &[f64]) -> Self {
        let (n, m) = (supply.len(), demand.len());
        let mut basis = Self {
            n,
            m,
            cells: Vec::with_capacity(n + m - 1),
            flow: vec![0.0; n * m],
            basic: vec![false; n * m],
        };
        let (mut i, mut j) = (0, 0);
        let (mut s, mut d) = (supply[0], demand[0]);
        loop {
            let x = s.min(d);
            basis.cells.push((i, j));
            basis.basic[i * m + j] = true;
            basis.flow[i * m + j] = x;
            s -= x;
            d -= x;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if (s <= d && i < n - 1) || j == m - 1 {
                i += 1;
                s = supply[i];
            } else {
                j += 1;
                d = demand[j];
            }
        }
        basis
    }

    fn is_basic(&self, i: usize, j: usize) -> bool {
        self.basic[i * self.m + j]
    }

    /// Adjacency of the basis tree; nodes `0..n` are rows, `n..n+m` columns.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + self.m];
        for &(i, j) in &self.cells {
            adj[i].push(self.n + j);
            adj[self.n + j].push(i);
        }
        adj
    }

    /// Dual potentials with `u_0 = 0` and `u_i + v_j = c_ij` on basic cells.
    fn potentials(&self, cost: &CostMatrix) -> (Vec<f64>, Vec<f64>) {
        let adj = self.adjacency();
        let mut pot = vec![f64::NAN; self.n + self.m];
        let mut queue = VecDeque::from([0usize]);
        pot[0] = 0.0;
        while let Some(node) = queue.pop_front() {
            for &next in &adj[node] {
                if !pot[next].is_nan() {
                    continue;
                }
                let c = if node < self.n {
                    cost.get(node, next - self.n)
                } else {
                    cost.get(next, node - self.n)
                };
                pot[next] = c - pot[node];
                queue.push_back(next);
            }
        }
        let v = pot.split_off(self.n);
        (pot, v)
    }

    /// Tree path from row node `i` to column node `n + j`, as cells ordered
    /// starting at the column end.
    fn path(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let adj = self.adjacency();
        let target = self.n + j;
        let mut parent = vec![usize::MAX; self.n + self.m];
        parent[i] = i;
        let mut queue = VecDeque::from([i]);
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &next in &adj[node] {
                if parent[next] == usize::MAX {
                    parent[next] = node;
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = target;
        while node != i {
            let prev = parent[node];
            let cell = if node < self.n {
                (node, prev - self.n)
            } else {
                (prev, node - self.n)
            };
            cells.push(cell);
            node = prev;
        }
        cells
    }

    fn pivot(&mut self, i: usize, j: usize) {
        let m = self.m;
        let path = self.path(i, j);
        // path[0] touches column j and loses flow; signs alternate from there
        let (leave_pos, theta) = path
            .iter()
            .enumerate()
            .step_by(2)
            .map(|(k, &(a, b))| (k, self.flow[a * m + b]))
            .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });

        self.flow[i * m + j] = theta;
        for (k, &(a, b)) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.flow[a * m + b] -= theta;
            } else {
                self.flow[a * m + b] += theta;
            }
        }
        let (la, lb) = path[leave_pos];
        self.flow[la * m + lb] = 0.0;
        self.basic[la * m + lb] = false;
        self.basic[i * m + j] = true;
        let slot = self
            .cells
            .iter()
            .position(|&c| c == (la, lb))
            .expect("leaving cell is basic");
        self.cells[slot] = (i, j);
    }

    /// Solves the basic flows for the given marginals by peeling tree leaves.
    fn tree_flows(&self, supply: &[f64], demand: &[f64]) -> Vec<f64> {
        let nodes = self.n + self.m;
        let mut residual: Vec<f64> = supply.iter().chain(demand).copied().collect();
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            incident[i].push(k);
            incident[self.n + j].push(k);
        }
        let mut degree: Vec<usize> = incident.iter().map(Vec::len).collect();
        let mut assigned = vec![false; self.cells.len()];
        let mut flows = vec![0.0; self.n * self.m];
        let mut leaves: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
        let mut remaining = self.cells.len();

        while remaining > 0 {
            let leaf = leaves.pop().expect("a tree always has a leaf");
            if degree[leaf] != 1 {
                continue;
            }
            let k = *incident[leaf]
                .iter()
                .find(|&&k| !assigned[k])
                .expect("leaf has one open edge");
            let (i, j) = self.cells[k];
            let other = if leaf < self.n { self.n + j } else { i };
            let x = residual[leaf];
            flows[i * self.m + j] = x;
            residual[other] -= x;
            residual[leaf] = 0.0;
            assigned[k] = true;
            remaining -= 1;
            degree[leaf] = 0;
            degree[other] -= 1;
            if degree[other] == 1 {
                leaves.push(other);
            }
        }
        flows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::brute_force_transport;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cost(rows: &[Vec<f64>]) -> CostMatrix {
        CostMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn single_source() {
        let plan = solve_transport(&[1.0], &[0.4, 0.6], &cost(&[vec![0.2, 0.5]])).unwrap();
        assert_eq!(plan.to_rows(), [vec![0.4, 0.6]]);
        assert_abs_diff_eq!(plan.cost(), 0.38, epsilon = 1e-12);
    }

    #[test]
    fn zero_cost_diagonal() {
        let plan = solve_transport(&[0.5, 0.5], &[0.5, 0.5], &cost(&[vec![0.0, 1.0], vec![1.0, 0.0]])).unwrap();
        assert_eq!(plan.to_rows(), [vec![0.5, 0.0], vec![0.0, 0.5]]);
        assert_eq!(plan.cost(), 0.0);
    }

    #[test]
    fn two_by_two() {
        // feasible plans are P11 = t in [0, 0.3]; cost 0.62 - 0.8 t
        let plan = solve_transport(&[0.3, 0.7], &[0.5, 0.5], &cost(&[vec![0.2, 0.8], vec![0.6, 0.4]])).unwrap();
        assert_abs_diff_eq!(plan.cost(), 0.38, epsilon = 1e-12);
        let rows = plan.to_rows();
        for (got, want) in rows.concat().iter().zip([0.3, 0.0, 0.2, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn needs_pivots() {
        // north-west corner puts everything on the expensive diagonal
        let c = cost(&[vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]);
        let w = [1.0 / 3.0; 3];
        let plan = solve_transport(&w, &w, &c).unwrap();
        assert_abs_diff_eq!(plan.cost(), 0.0, epsilon = 1e-12);
        assert!(plan.marginal_violation() < 1e-12);
    }

    #[test]
    fn zero_weights_carry_no_mass() {
        let c = cost(&[vec![0.3, 0.1], vec![0.0, 0.9], vec![0.5, 0.5]]);
        let plan = solve_transport(&[0.5, 0.0, 0.5], &[0.0, 1.0], &c).unwrap();
        assert_abs_diff_eq!(plan.cost(), 0.5 * 0.1 + 0.5 * 0.5, epsilon = 1e-12);
        assert!(plan.min_entry() >= 0.0);
        assert!(plan.marginal_violation() < 1e-12);
    }

    #[test]
    fn rejects_infeasible_weights() {
        let c = cost(&[vec![0.0, 0.0]]);
        assert!(matches!(
            solve_transport(&[0.9], &[0.5, 0.5], &c),
            Err(TransportError::InfeasibleWeights(_))
        ));
        assert!(matches!(
            solve_transport(&[1.0], &[1.5, -0.5], &c),
            Err(TransportError::InfeasibleWeights(_))
        ));
        assert!(matches!(
            solve_transport(&[0.5, 0.5], &[0.5, 0.5], &c),
            Err(TransportError::ShapeMismatch { .. })
        ));
    }

    fn simplex_weights(raw: Vec<f64>) -> Vec<f64> {
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }

    prop_compose! {
        fn instance(max: usize)(n in 1..=max, m in 1..=max)
            (wr in prop::collection::vec(0.01f64..1.0, n),
             wp in prop::collection::vec(0.01f64..1.0, m),
             c in prop::collection::vec(0.0f64..1.0, n * m),
             n in Just(n), m in Just(m))
            -> (Vec<f64>, Vec<f64>, CostMatrix) {
            (simplex_weights(wr), simplex_weights(wp), CostMatrix::new(n, m, c, crate::transport::CostKind::Custom).unwrap())
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force((wr, wp, c) in instance(3)) {
            let fast = solve_transport(&wr, &wp, &c).unwrap();
            let slow = brute_force_transport(&wr, &wp, &c).unwrap();
            prop_assert!((fast.cost() - slow.cost()).abs() <= 1e-9);
        }

        #[test]
        fn feasible_and_no_worse_than_heuristics((wr, wp, c) in instance(12)) {
            let plan = solve_transport(&wr, &wp, &c).unwrap();
            prop_assert!(plan.marginal_violation() <= 1e-8);
            prop_assert!(plan.min_entry() >= 0.0);
            let direct: f64 = plan.matrix().iter().zip(c.values()).map(|(x, d)| x * d).sum();
            prop_assert!((direct - plan.cost()).abs() <= 1e-8);
            let nw = TransportPlan::north_west_corner(&wr, &wp, &c).unwrap();
            let ind = TransportPlan::independent(&wr, &wp, &c).unwrap();
            prop_assert!(plan.cost() <= nw.cost() + 1e-12);
            prop_assert!(plan.cost() <= ind.cost() + 1e-12);
        }

        #[test]
        fn symmetric_under_transpose((wr, wp, c) in instance(8)) {
            let a = solve_transport(&wr, &wp, &c).unwrap();
            let b = solve_transport(&wp, &wr, &c.transpose()).unwrap();
            prop_assert!((a.cost() - b.cost()).abs() <= 1e-9);
        }

        #[test]
        fn identity_has_zero_cost(
            w in prop::collection::vec(0.01f64..1.0, 1..10),
            off in prop::collection::vec(0.01f64..1.0, 100),
        ) {
            let w = simplex_weights(w);
            let n = w.len();
            let values = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { off[k] }).collect();
            let c = CostMatrix::new(n, n, values, crate::transport::CostKind::Custom).unwrap();
            let plan = solve_transport(&w, &w, &c).unwrap();
            prop_assert!(plan.cost().abs() <= 1e-12);
        }
    }
}
