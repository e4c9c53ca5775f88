use serde::{Deserialize, Serialize};

use super::distribution::EmpiricalDistribution;
use super::transport::{solve_transport, TransportPlan};
use crate::error::{Error, Result};
use crate::grid::CellId;

/// Exact 1-Wasserstein distance between distributions on the real line, from the
/// integral of the absolute difference of the two CDFs.
pub fn wasserstein1_scalar(
    mu: &EmpiricalDistribution<f64>,
    nu: &EmpiricalDistribution<f64>,
) -> Result<f64> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::Empty("W1 of an empty distribution".into()));
    }
    let mut events: Vec<(f64, f64)> = mu
        .iter()
        .map(|(&x, w)| (x, w))
        .chain(nu.iter().map(|(&x, w)| (x, -w)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut diff = 0.0;
    let mut total = 0.0;
    for k in 0..events.len() - 1 {
        diff += events[k].1;
        total += diff.abs() * (events[k + 1].0 - events[k].0);
    }
    Ok(total)
}

/// Non-negative transport costs between the atoms of two supports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundCostMatrix {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
    /// Normalising distance in meters (0 when not spatially normalised or degenerate).
    pub d_max: f64,
}

impl GroundCostMatrix {
    pub fn new(rows: usize, cols: usize, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} costs for a {rows}x{cols} matrix",
                costs.len()
            )));
        }
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidParameter(
                "costs must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            costs,
            d_max: 0.0,
        })
    }

    /// `|x_i - y_j|` between two real supports.
    pub fn absolute_difference(xs: &[f64], ys: &[f64]) -> Self {
        let costs = xs
            .iter()
            .flat_map(|x| ys.iter().map(move |y| (x - y).abs()))
            .collect();
        Self {
            rows: xs.len(),
            cols: ys.len(),
            costs,
            d_max: 0.0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.costs
    }
}

/// Optimal transport cost between `mu` (rows) and `nu` (columns) under `cost`.
pub fn wasserstein1_ground_cost<T: Clone + PartialOrd>(
    mu: &EmpiricalDistribution<T>,
    nu: &EmpiricalDistribution<T>,
    cost: &GroundCostMatrix,
) -> Result<f64> {
    Ok(optimal_plan(mu, nu, cost)?.cost)
}

/// Same as [`wasserstein1_ground_cost`] but returns the optimal coupling too.
pub fn optimal_plan<T: Clone + PartialOrd>(
    mu: &EmpiricalDistribution<T>,
    nu: &EmpiricalDistribution<T>,
    cost: &GroundCostMatrix,
) -> Result<TransportPlan> {
    if cost.rows != mu.len() || cost.cols != nu.len() {
        return Err(Error::DimensionMismatch(format!(
            "cost matrix is {}x{} but supports have {} and {} atoms",
            cost.rows,
            cost.cols,
            mu.len(),
            nu.len()
        )));
    }
    solve_transport(mu.weights(), nu.weights(), &cost.costs)
}

/// Centroid distances between grid cells, divided by the largest distance between
/// any two cells of a reference state set.
///
/// Distances are computed from integer cell offsets, so the matrix does not depend
/// on the cell edge or on translations of the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialCost {
    edge_m: f64,
    d_max_cells: f64,
}

impl SpatialCost {
    pub fn new(states: &[CellId], edge_m: f64) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Empty("spatial cost needs at least one cell".into()));
        }
        Ok(Self {
            edge_m,
            d_max_cells: diameter(states),
        })
    }

    pub fn d_max_m(&self) -> f64 {
        self.d_max_cells * self.edge_m
    }

    pub fn cost(&self, a: CellId, b: CellId) -> f64 {
        if self.d_max_cells == 0.0 {
            return 0.0;
        }
        let d = ((a.col - b.col) as f64).hypot((a.row - b.row) as f64);
        (d / self.d_max_cells).min(1.0)
    }

    pub fn matrix(&self, a: &[CellId], b: &[CellId]) -> GroundCostMatrix {
        let costs = a
            .iter()
            .flat_map(|&x| b.iter().map(move |&y| self.cost(x, y)))
            .collect();
        GroundCostMatrix {
            rows: a.len(),
            cols: b.len(),
            costs,
            d_max: self.d_max_m(),
        }
    }
}

/// Normalised centroid-distance matrix between two cell supports; the normaliser is
/// the largest centroid distance over their union.
pub fn spatial_ground_cost(a: &[CellId], b: &[CellId], edge_m: f64) -> Result<GroundCostMatrix> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("spatial cost needs non-empty supports".into()));
    }
    let union: Vec<CellId> = a.iter().chain(b).copied().collect();
    Ok(SpatialCost::new(&union, edge_m)?.matrix(a, b))
}

/// Largest pairwise distance (in cell units) of a cell set, via its convex hull.
fn diameter(cells: &[CellId]) -> f64 {
    let mut pts: Vec<(i64, i64)> = cells.iter().map(|c| (c.col, c.row)).collect();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 2 {
        return 0.0;
    }
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| -> i128 {
        (a.0 - o.0) as i128 * (b.1 - o.1) as i128 - (a.1 - o.1) as i128 * (b.0 - o.0) as i128
    };
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(i64, i64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let mut best: i128 = 0;
    for (k, &p) in hull.iter().enumerate() {
        for &q in &hull[k + 1..] {
            let dx = (p.0 - q.0) as i128;
            let dy = (p.1 - q.1) as i128;
            best = best.max(dx * dx + dy * dy);
        }
    }
    (best as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dist(xs: &[f64], ws: &[f64]) -> EmpiricalDistribution<f64> {
        EmpiricalDistribution::new(xs.to_vec(), ws.to_vec()).unwrap()
    }

    #[test]
    fn scalar_examples() {
        let a = dist(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(wasserstein1_scalar(&a, &a).unwrap(), 0.0);
        let d0 = EmpiricalDistribution::point_mass(0.0);
        let d1 = EmpiricalDistribution::point_mass(1.0);
        assert_abs_diff_eq!(wasserstein1_scalar(&d0, &d1).unwrap(), 1.0);
        assert_abs_diff_eq!(wasserstein1_scalar(&a, &d0).unwrap(), 0.5);
    }

    #[test]
    fn two_cells_have_unit_off_diagonal_cost() {
        let a = [CellId::new(0, 0)];
        let b = [CellId::new(3, 4)];
        let c = spatial_ground_cost(&a, &b, 250.0).unwrap();
        assert_eq!(c.get(0, 0), 1.0);
        assert_abs_diff_eq!(c.d_max, 1250.0);
    }

    #[test]
    fn collinear_cells() {
        let cells = [CellId::new(0, 0), CellId::new(1, 0), CellId::new(2, 0)];
        let c = spatial_ground_cost(&cells, &cells, 100.0).unwrap();
        assert_eq!(c.get(0, 0), 0.0);
        assert_eq!(c.get(0, 1), 0.5);
        assert_eq!(c.get(0, 2), 1.0);
        let doubled = spatial_ground_cost(&cells, &cells, 200.0).unwrap();
        assert_eq!(c.as_slice(), doubled.as_slice());
    }

    #[test]
    fn single_cell_gives_zero_costs() {
        let cells = [CellId::new(5, 5)];
        let c = spatial_ground_cost(&cells, &cells, 100.0).unwrap();
        assert_eq!(c.get(0, 0), 0.0);
    }

    #[test]
    fn diameter_matches_brute_force() {
        let cells: Vec<CellId> = (0..40)
            .map(|k| CellId::new((k * 7919) % 23 - 11, (k * 104729) % 17 - 8))
            .collect();
        let mut brute: f64 = 0.0;
        for a in &cells {
            for b in &cells {
                brute = brute.max(((a.col - b.col) as f64).hypot((a.row - b.row) as f64));
            }
        }
        assert_eq!(diameter(&cells), brute);
        assert_eq!(
            diameter(&[CellId::new(0, 0), CellId::new(1, 1), CellId::new(2, 2)]),
            8f64.sqrt()
        );
    }

    #[test]
    fn mass_at_extreme_cells_costs_one() {
        let cells = [CellId::new(0, 0), CellId::new(1, 0), CellId::new(4, 0)];
        let c = spatial_ground_cost(&cells, &cells, 100.0).unwrap();
        let mu = EmpiricalDistribution::new(cells.to_vec(), vec![1.0, 0.0, 0.0]).unwrap();
        let nu = EmpiricalDistribution::new(cells.to_vec(), vec![0.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(wasserstein1_ground_cost(&mu, &nu, &c).unwrap(), 1.0);
        assert!(wasserstein1_ground_cost(
            &mu,
            &nu,
            &GroundCostMatrix::new(1, 1, vec![0.0]).unwrap()
        )
        .is_err());
    }
}
