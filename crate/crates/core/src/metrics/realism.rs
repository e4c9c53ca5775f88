//! Realism checks against constraint layers and the real dataset's semantics.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use geo::{Distance, Euclidean, Point};
use petgraph::algo::astar;
use petgraph::graph::NodeIndex;
use serde::{Deserialize, Serialize};

use super::layers::{ConstraintLayers, RoadGraph};
use super::{MetricId, MetricResult};
use crate::error::{Error, Result};
use crate::grid::{CellId, GridSpec};
use crate::mobility::{Dataset, GeoPoint};

/// A point violates the constraints when it lies in the implausible domain and
/// farther than `delta_m` from every accessible geometry.
pub fn point_violation(p: &GeoPoint, layers: &ConstraintLayers, delta_m: f64) -> bool {
    layers.in_implausible_domain(p) && layers.distance_to_accessible(p) > delta_m
}

/// Fraction of trajectories with at least one violating point.
pub fn trajectory_implausibility(
    d: &Dataset,
    layers: &ConstraintLayers,
    delta_m: f64,
) -> Result<MetricResult> {
    if d.is_empty() {
        return Err(Error::Empty("implausibility of an empty dataset".into()));
    }
    let bad = d
        .trajectories()
        .iter()
        .filter(|t| {
            t.points
                .iter()
                .any(|p| point_violation(&p.point, layers, delta_m))
        })
        .count();
    Ok(MetricResult::value(
        MetricId::TrajectoryImplausibility,
        bad as f64 / d.len() as f64,
    ))
}

/// Fraction of all points that violate the constraints.
pub fn location_implausibility(
    d: &Dataset,
    layers: &ConstraintLayers,
    delta_m: f64,
) -> Result<MetricResult> {
    let n = d.n_points();
    if n == 0 {
        return Err(Error::Empty("implausibility of an empty dataset".into()));
    }
    let bad = d
        .trajectories()
        .iter()
        .flat_map(|t| &t.points)
        .filter(|p| point_violation(&p.point, layers, delta_m))
        .count();
    Ok(MetricResult::value(
        MetricId::LocationImplausibility,
        bad as f64 / n as f64,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryMatchParams {
    /// Minimum categorised observations for a real cell to be eligible.
    pub k_min: usize,
    /// Minimum share of the top category in an eligible real cell.
    pub dominance: f64,
}

impl Default for CategoryMatchParams {
    fn default() -> Self {
        Self {
            k_min: 5,
            dominance: 0.5,
        }
    }
}

fn cell_category_counts(d: &Dataset, grid: &GridSpec) -> BTreeMap<CellId, BTreeMap<String, usize>> {
    let mut out: BTreeMap<CellId, BTreeMap<String, usize>> = BTreeMap::new();
    for p in d.trajectories().iter().flat_map(|t| &t.points) {
        if let Some(label) = p.category.and_then(|c| d.vocabulary().label(c)) {
            *out.entry(grid.cell_of(p.point.x, p.point.y))
                .or_default()
                .entry(label.to_string())
                .or_default() += 1;
        }
    }
    out
}

/// Top category, with ties going to the lexicographically smallest label.
fn dominant(counts: &BTreeMap<String, usize>) -> Option<(&str, usize)> {
    let mut best: Option<(&str, usize)> = None;
    for (label, &n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((label, n));
        }
    }
    best
}

/// Share of eligible real cells whose dominant category is also dominant in the
/// same synthetic cell. Categories are matched by label.
pub fn category_location_match(
    real: &Dataset,
    syn: &Dataset,
    grid: &GridSpec,
    params: &CategoryMatchParams,
) -> Result<MetricResult> {
    if !real.has_categories() {
        return Err(Error::InvalidParameter(
            "category-location match needs categories in the real dataset".into(),
        ));
    }
    if !syn.has_categories() {
        return Ok(MetricResult::not_applicable(
            MetricId::CategoryLocationMatch,
            "synthetic dataset carries no categories",
        ));
    }
    let rc = cell_category_counts(real, grid);
    let sc = cell_category_counts(syn, grid);
    let mut eligible = 0usize;
    let mut matched = 0usize;
    for (cell, counts) in &rc {
        let total: usize = counts.values().sum();
        let Some((label, top)) = dominant(counts) else {
            continue;
        };
        if total < params.k_min || (top as f64) < params.dominance * total as f64 {
            continue;
        }
        eligible += 1;
        if sc
            .get(cell)
            .and_then(dominant)
            .is_some_and(|(l, _)| l == label)
        {
            matched += 1;
        }
    }
    if eligible == 0 {
        return Err(Error::Undefined(
            "no real cell meets the observation and dominance thresholds".into(),
        ));
    }
    Ok(MetricResult::value(
        MetricId::CategoryLocationMatch,
        matched as f64 / eligible as f64,
    )
    .with_note(format!("eligible cells: {eligible}")))
}

/// Observed road edges of the real dataset plus shortest-path imputations between
/// consecutive distinct observed edges.
pub fn reconstruct_infrastructure(real: &Dataset, roads: &RoadGraph) -> Result<BTreeSet<usize>> {
    if roads.is_empty() {
        return Err(Error::Empty("road graph has no edges".into()));
    }
    let edges = roads.edges();
    let g = roads.graph();
    let mut cache: HashMap<(NodeIndex, NodeIndex), Option<(f64, Vec<NodeIndex>)>> = HashMap::new();
    let mut shortest = |a: NodeIndex, b: NodeIndex| {
        cache
            .entry((a, b))
            .or_insert_with(|| astar(g, a, |n| n == b, |e| edges[*e.weight()].length_m, |_| 0.0))
            .clone()
    };
    let mut infra = BTreeSet::new();
    for t in real.trajectories() {
        let mut seq: Vec<usize> = Vec::with_capacity(t.len());
        for p in &t.points {
            let e = roads
                .nearest_edge(&Point::new(p.point.x, p.point.y))
                .expect("graph is non-empty");
            if seq.last() != Some(&e) {
                seq.push(e);
            }
        }
        infra.extend(seq.iter().copied());
        for w in seq.windows(2) {
            let (from, to) = (&edges[w[0]], &edges[w[1]]);
            let mut best: Option<(f64, Vec<NodeIndex>)> = None;
            for a in [from.u, from.v] {
                for b in [to.u, to.v] {
                    if let Some((cost, path)) = shortest(a, b) {
                        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                            best = Some((cost, path));
                        }
                    }
                }
            }
            // no path: a topological jump, kept as the two observed edges only
            let Some((_, path)) = best else { continue };
            for pair in path.windows(2) {
                let e = g
                    .edges_connecting(pair[0], pair[1])
                    .map(|e| *e.weight())
                    .min_by(|&x, &y| edges[x].length_m.total_cmp(&edges[y].length_m))
                    .expect("consecutive path nodes are adjacent");
                infra.insert(e);
            }
        }
    }
    Ok(infra)
}

/// Mean distance (km) from synthetic points to the infrastructure reconstructed
/// from the real dataset, averaged per trajectory and then over trajectories.
pub fn map_reconstruction_metric(
    real: &Dataset,
    syn: &Dataset,
    layers: &ConstraintLayers,
) -> Result<MetricResult> {
    if syn.is_empty() {
        return Err(Error::Empty("synthetic dataset is empty".into()));
    }
    let infra = reconstruct_infrastructure(real, &layers.roads)?;
    let edges = layers.roads.edges();
    let per_traj: Vec<f64> = syn
        .trajectories()
        .iter()
        .map(|t| {
            let total: f64 = t
                .points
                .iter()
                .map(|p| {
                    let pt = Point::new(p.point.x, p.point.y);
                    infra
                        .iter()
                        .map(|&e| Euclidean.distance(&pt, &edges[e].geometry))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum();
            total / t.len() as f64 / 1000.0
        })
        .collect();
    let mean = per_traj.iter().sum::<f64>() / per_traj.len() as f64;
    Ok(MetricResult::value(MetricId::MapReconstruction, mean)
        .with_note(format!("reconstructed edges: {}", infra.len())))
}
