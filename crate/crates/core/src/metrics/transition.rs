//! Pooled first-order mobility Markov chain over grid cells and the
//! visitation-weighted row-wise W1 between two such chains.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::statistics::same_grid;
use super::{MetricId, MetricResult};
use crate::error::{Error, Result};
use crate::grid::{CellId, DiscretizedDataset};
use crate::measures::{wasserstein1_ground_cost, EmpiricalDistribution, SpatialCost};

/// Row-stochastic transition kernel with the number of observed transitions
/// leaving each origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    counts: BTreeMap<CellId, BTreeMap<CellId, f64>>,
    visit_counts: BTreeMap<CellId, f64>,
}

impl TransitionMatrix {
    /// Builds a kernel from (possibly fractional) transition weights. Zero and
    /// negative weights are rejected; empty rows are dropped.
    pub fn from_counts(counts: BTreeMap<CellId, BTreeMap<CellId, f64>>) -> Result<Self> {
        let mut kept = BTreeMap::new();
        let mut visit_counts = BTreeMap::new();
        for (origin, row) in counts {
            if row.values().any(|&w| !(w > 0.0 && w.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "transition weights out of {origin:?} must be positive"
                )));
            }
            if row.is_empty() {
                continue;
            }
            visit_counts.insert(origin, row.values().sum());
            kept.insert(origin, row);
        }
        Ok(Self {
            counts: kept,
            visit_counts,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Origins with outgoing mass, in cell order.
    pub fn origins(&self) -> impl Iterator<Item = CellId> + '_ {
        self.counts.keys().copied()
    }

    /// Every cell appearing as an origin or destination, sorted.
    pub fn states(&self) -> Vec<CellId> {
        let mut s: BTreeSet<CellId> = self.counts.keys().copied().collect();
        for row in self.counts.values() {
            s.extend(row.keys().copied());
        }
        s.into_iter().collect()
    }

    /// Number of transitions observed out of `origin` (`n_i`).
    pub fn visit_count(&self, origin: CellId) -> f64 {
        self.visit_counts.get(&origin).copied().unwrap_or(0.0)
    }

    pub fn total_transitions(&self) -> f64 {
        self.visit_counts.values().sum()
    }

    /// Conditional next-state distribution `P_i`, or `None` for a sink / unseen origin.
    pub fn row(&self, origin: CellId) -> Option<Vec<(CellId, f64)>> {
        let row = self.counts.get(&origin)?;
        let n = self.visit_counts[&origin];
        Some(row.iter().map(|(&c, &w)| (c, w / n)).collect())
    }

    pub fn probability(&self, from: CellId, to: CellId) -> f64 {
        match self.counts.get(&from).and_then(|r| r.get(&to)) {
            Some(w) => w / self.visit_counts[&from],
            None => 0.0,
        }
    }

    fn row_distribution(&self, origin: CellId) -> Option<EmpiricalDistribution<CellId>> {
        self.counts
            .get(&origin)
            .map(|row| EmpiricalDistribution::from_counts(row).expect("rows are positive"))
    }

    /// The same kernel with all mass leaving `origin` removed.
    pub fn without_origin(&self, origin: CellId) -> Self {
        let mut out = self.clone();
        out.counts.remove(&origin);
        out.visit_counts.remove(&origin);
        out
    }
}

/// Maximum-likelihood kernel pooled over every consecutive pair of every trajectory.
pub fn build_transition_matrix(dd: &DiscretizedDataset) -> Result<TransitionMatrix> {
    let mut counts: BTreeMap<CellId, BTreeMap<CellId, f64>> = BTreeMap::new();
    for t in &dd.trajectories {
        for w in t.cells.windows(2) {
            *counts.entry(w[0]).or_default().entry(w[1]).or_default() += 1.0;
        }
    }
    if counts.is_empty() {
        return Err(Error::Undefined(
            "no transitions: every trajectory has a single point".into(),
        ));
    }
    TransitionMatrix::from_counts(counts)
}

/// `D = sum_i pi_i d_i` over the real origins, where `d_i` is the spatial W1 between
/// the real and synthetic rows and `d_i = 1` when the synthetic chain has no mass
/// leaving `i`. Synthetic-only origins get zero weight.
pub fn transition_probability_metric(
    real: &TransitionMatrix,
    syn: &TransitionMatrix,
    cost: &SpatialCost,
) -> Result<MetricResult> {
    if real.is_empty() {
        return Err(Error::Empty("real transition matrix has no rows".into()));
    }
    let total = real.total_transitions();
    let mut d = 0.0;
    let mut sinks = 0usize;
    for origin in real.origins() {
        let n = real.visit_count(origin);
        let di = match (real.row_distribution(origin), syn.row_distribution(origin)) {
            (Some(p), Some(q)) if p == q => 0.0,
            (Some(p), Some(q)) => {
                let m = cost.matrix(p.support(), q.support());
                wasserstein1_ground_cost(&p, &q, &m)?.clamp(0.0, 1.0)
            }
            _ => {
                sinks += 1;
                1.0
            }
        };
        d += n * di;
    }
    // dividing once keeps integer-count cases exact
    let d = d / total;
    Ok(
        MetricResult::value(MetricId::TransitionProbability, d.clamp(0.0, 1.0)).with_note(format!(
            "real origins without synthetic outgoing mass: {sinks}"
        )),
    )
}

/// Builds both chains and evaluates [`transition_probability_metric`] with the
/// spatial cost normalised over the union of their states.
pub fn transition_probability_on_grid(
    real: &DiscretizedDataset,
    syn: &DiscretizedDataset,
) -> Result<MetricResult> {
    same_grid(real, syn)?;
    let rt = build_transition_matrix(real)?;
    let st = match build_transition_matrix(syn) {
        Ok(st) => st,
        // no synthetic transitions at all: every real row is a sink
        Err(Error::Undefined(_)) => TransitionMatrix::from_counts(BTreeMap::new())?,
        Err(e) => return Err(e),
    };
    let mut states = rt.states();
    states.extend(st.states());
    let cost = SpatialCost::new(&states, real.grid.cell_edge_m)?;
    transition_probability_metric(&rt, &st, &cost)
}
