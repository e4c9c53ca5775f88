//! Absolute uniform grids anchored at the CRS origin.

mod select;
mod sweep;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::{CategoryId, Dataset};

pub use select::{kneedle_elbow, select_cell_size, CellSizeSelection};
pub use sweep::{stability_sweep, write_sweep_csv, write_sweep_file, SweepConfig, SweepRow};

/// Integer grid coordinates. Ordered by column, then row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub col: i64,
    pub row: i64,
}

impl CellId {
    pub fn new(col: i64, row: i64) -> Self {
        Self { col, row }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cell_edge_m: f64,
    /// Phase shift of the lattice relative to the origin, each component in `[0, edge)`.
    pub offset: (f64, f64),
}

impl GridSpec {
    pub fn new(cell_edge_m: f64) -> Result<Self> {
        Self::with_offset(cell_edge_m, (0.0, 0.0))
    }

    pub fn with_offset(cell_edge_m: f64, offset: (f64, f64)) -> Result<Self> {
        if !(cell_edge_m.is_finite() && cell_edge_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cell edge must be positive, got {cell_edge_m}"
            )));
        }
        let ok = |o: f64| (0.0..cell_edge_m).contains(&o);
        if !(ok(offset.0) && ok(offset.1)) {
            return Err(Error::InvalidParameter(format!(
                "grid offset {offset:?} outside [0, {cell_edge_m})"
            )));
        }
        Ok(Self {
            cell_edge_m,
            offset,
        })
    }

    pub fn cell_of(&self, x: f64, y: f64) -> CellId {
        CellId {
            col: ((x - self.offset.0) / self.cell_edge_m).floor() as i64,
            row: ((y - self.offset.1) / self.cell_edge_m).floor() as i64,
        }
    }

    pub fn centroid(&self, c: CellId) -> (f64, f64) {
        (
            self.offset.0 + (c.col as f64 + 0.5) * self.cell_edge_m,
            self.offset.1 + (c.row as f64 + 0.5) * self.cell_edge_m,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedTrajectory {
    pub traj_id: String,
    pub user_id: String,
    pub cells: Vec<CellId>,
    pub timestamps: Vec<f64>,
    pub categories: Vec<Option<CategoryId>>,
}

impl DiscretizedTrajectory {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedDataset {
    pub grid: GridSpec,
    pub trajectories: Vec<DiscretizedTrajectory>,
}

impl DiscretizedDataset {
    pub fn n_points(&self) -> usize {
        self.trajectories.iter().map(|t| t.len()).sum()
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.trajectories
            .iter()
            .flat_map(|t| t.cells.iter().copied())
    }
}

pub fn discretize(d: &Dataset, grid: &GridSpec) -> DiscretizedDataset {
    let trajectories = d
        .trajectories()
        .iter()
        .map(|t| DiscretizedTrajectory {
            traj_id: t.traj_id.clone(),
            user_id: t.user_id.clone(),
            cells: t
                .points
                .iter()
                .map(|p| grid.cell_of(p.point.x, p.point.y))
                .collect(),
            timestamps: t.points.iter().map(|p| p.timestamp).collect(),
            categories: t.points.iter().map(|p| p.category).collect(),
        })
        .collect();
    DiscretizedDataset {
        grid: *grid,
        trajectories,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDiagnostics {
    /// Distinct origin-destination pairs over all transitions.
    pub unique_transition_fraction: f64,
    pub self_transition_fraction: f64,
    /// Visited cells over the cells of the dataset's bounding box.
    pub occupancy_ratio: f64,
}

pub fn grid_diagnostics(dd: &DiscretizedDataset) -> Result<GridDiagnostics> {
    let mut transitions = 0usize;
    let mut self_loops = 0usize;
    let mut pairs = HashSet::new();
    for t in &dd.trajectories {
        for w in t.cells.windows(2) {
            transitions += 1;
            if w[0] == w[1] {
                self_loops += 1;
            }
            pairs.insert((w[0], w[1]));
        }
    }
    if transitions == 0 {
        return Err(Error::Undefined(
            "grid diagnostics need at least one transition".into(),
        ));
    }
    let visited: HashSet<CellId> = dd.cells().collect();
    let (mut c0, mut c1, mut r0, mut r1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for c in &visited {
        c0 = c0.min(c.col);
        c1 = c1.max(c.col);
        r0 = r0.min(c.row);
        r1 = r1.max(c.row);
    }
    let bbox = (c1 - c0 + 1) as f64 * (r1 - r0 + 1) as f64;
    Ok(GridDiagnostics {
        unique_transition_fraction: pairs.len() as f64 / transitions as f64,
        self_transition_fraction: self_loops as f64 / transitions as f64,
        occupancy_ratio: visited.len() as f64 / bbox,
    })
}
