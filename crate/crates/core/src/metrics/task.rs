//! Train-on-synthetic, test-on-real tasks.

use std::collections::{BTreeMap, BTreeSet};

use geo::{Dbscan, Point};
use serde::{Deserialize, Serialize};

use super::transition::TransitionMatrix;
use super::{MetricId, MetricResult};
use crate::error::{Error, Result};
use crate::grid::{CellId, DiscretizedDataset};
use crate::measures::{wasserstein1_ground_cost, EmpiricalDistribution, SpatialCost};
use crate::mobility::Dataset;

/// Sorted state space: every cell seen by the synthetic chain or the real data.
fn state_space(syn: &TransitionMatrix, real: &DiscretizedDataset) -> Vec<CellId> {
    let mut s: BTreeSet<CellId> = syn.states().into_iter().collect();
    s.extend(real.cells());
    s.into_iter().collect()
}

/// The `k` most probable next states out of `from`; ties and the uniform fallback
/// for sinks are ordered by cell index. Zero-probability states are never predicted.
fn top_k(syn: &TransitionMatrix, from: CellId, states: &[CellId], k: usize) -> Vec<CellId> {
    match syn.row(from) {
        Some(mut row) => {
            row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            row.into_iter().take(k).map(|(c, _)| c).collect()
        }
        None => states.iter().take(k).copied().collect(),
    }
}

/// Mean over real trajectories of the fraction of steps whose true next cell is
/// among the top-`k` predictions of the synthetic chain.
pub fn next_location_prediction(
    syn: &TransitionMatrix,
    real: &DiscretizedDataset,
    k: usize,
) -> Result<MetricResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let states = state_space(syn, real);
    let mut cache: BTreeMap<CellId, BTreeSet<CellId>> = BTreeMap::new();
    let mut accs = Vec::new();
    for t in real.trajectories.iter().filter(|t| t.len() >= 2) {
        let mut hits = 0usize;
        for w in t.cells.windows(2) {
            let cand = cache
                .entry(w[0])
                .or_insert_with(|| top_k(syn, w[0], &states, k).into_iter().collect());
            if cand.contains(&w[1]) {
                hits += 1;
            }
        }
        accs.push(hits as f64 / (t.len() - 1) as f64);
    }
    if accs.is_empty() {
        return Err(Error::Undefined(
            "no real trajectory has a transition to predict".into(),
        ));
    }
    let skipped = real.trajectories.len() - accs.len();
    Ok(MetricResult::value(
        MetricId::NextLocationPrediction,
        accs.iter().sum::<f64>() / accs.len() as f64,
    )
    .with_note(format!(
        "k = {k}; single-point trajectories skipped: {skipped}"
    )))
}

fn population_at(real: &DiscretizedDataset, n: usize) -> BTreeMap<CellId, f64> {
    let mut v = BTreeMap::new();
    for t in &real.trajectories {
        if let Some(&c) = t.cells.get(n) {
            *v.entry(c).or_insert(0.0) += 1.0;
        }
    }
    v
}

/// One application of the synthetic chain to a population vector; sinks spread
/// their mass uniformly over the state space.
fn propagate(
    v: &BTreeMap<CellId, f64>,
    syn: &TransitionMatrix,
    states: &[CellId],
) -> BTreeMap<CellId, f64> {
    let mut out = BTreeMap::new();
    for (&c, &w) in v {
        match syn.row(c) {
            Some(row) => {
                for (to, p) in row {
                    *out.entry(to).or_insert(0.0) += w * p;
                }
            }
            None => {
                let share = w / states.len() as f64;
                for &s in states {
                    *out.entry(s).or_insert(0.0) += share;
                }
            }
        }
    }
    out.retain(|_, w| *w > 0.0);
    out
}

/// Average spatial W1 between the predicted population `V_n P_syn` and the observed
/// `V_{n+1}` over the first `N` sequence positions, `N` being the 90th percentile
/// (nearest rank) of real trajectory lengths.
pub fn global_flow_prediction(
    syn: &TransitionMatrix,
    real: &DiscretizedDataset,
) -> Result<MetricResult> {
    let mut lengths: Vec<f64> = real.trajectories.iter().map(|t| t.len() as f64).collect();
    if lengths.is_empty() {
        return Err(Error::Empty("real dataset has no trajectories".into()));
    }
    lengths.sort_by(f64::total_cmp);
    let rank = ((0.9 * lengths.len() as f64).ceil() as usize).max(1);
    let horizon = lengths[rank - 1] as usize;
    if horizon < 2 {
        return Err(Error::Undefined(
            "flow horizon is shorter than two sequence steps".into(),
        ));
    }
    let states = state_space(syn, real);
    let cost = SpatialCost::new(&states, real.grid.cell_edge_m)?;
    let mut total = 0.0;
    let mut steps = 0usize;
    for n in 0..horizon - 1 {
        let now = population_at(real, n);
        let next = population_at(real, n + 1);
        if now.is_empty() || next.is_empty() {
            break;
        }
        let predicted = EmpiricalDistribution::from_counts(&propagate(&now, syn, &states))?;
        let observed = EmpiricalDistribution::from_counts(&next)?;
        let d = if predicted == observed {
            0.0
        } else {
            let m = cost.matrix(predicted.support(), observed.support());
            wasserstein1_ground_cost(&predicted, &observed, &m)?
        };
        total += d;
        steps += 1;
    }
    Ok(
        MetricResult::value(MetricId::GlobalFlowPrediction, total / steps as f64)
            .with_note(format!("horizon N = {horizon}; steps averaged: {steps}")),
    )
}

/// Density clustering parameters for the synthetic centroids.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub eps_m: f64,
    /// Neighbourhood size (including the point itself) that makes a core point.
    pub min_samples: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            eps_m: 1000.0,
            min_samples: 5,
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Assigns each real centroid to the cluster of its nearest synthetic core point,
/// or to noise when that core point is farther than `eps`.
pub fn assign_to_synthetic_clusters(
    syn_centroids: &[[f64; 2]],
    real_centroids: &[[f64; 2]],
    params: &ClusterParams,
) -> Result<Vec<Option<usize>>> {
    if !(params.eps_m > 0.0) || params.min_samples == 0 {
        return Err(Error::InvalidParameter(
            "clustering needs eps > 0 and min_samples >= 1".into(),
        ));
    }
    let pts: Vec<Point> = syn_centroids
        .iter()
        .map(|c| Point::new(c[0], c[1]))
        .collect();
    let labels = pts.dbscan(params.eps_m, params.min_samples);
    let n_clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
    if n_clusters < 2 {
        return Err(Error::Undefined(format!(
            "density clustering found {n_clusters} synthetic cluster(s); at least 2 are needed"
        )));
    }
    let core: Vec<([f64; 2], usize)> = syn_centroids
        .iter()
        .zip(&labels)
        .filter_map(|(&c, &l)| {
            let neighbours = syn_centroids
                .iter()
                .filter(|&&o| dist(c, o) <= params.eps_m)
                .count();
            match l {
                Some(l) if neighbours >= params.min_samples => Some((c, l)),
                _ => None,
            }
        })
        .collect();
    Ok(real_centroids
        .iter()
        .map(|&r| {
            let (d, label) = core
                .iter()
                .map(|&(c, l)| (dist(r, c), l))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("a cluster has at least one core point");
            (d <= params.eps_m).then_some(label)
        })
        .collect())
}

/// Per-point silhouette `(b - a) / max(a, b)` for labelled points; members of
/// singleton clusters score 0.
pub fn silhouette_scores(points: &[[f64; 2]], labels: &[usize]) -> Vec<f64> {
    let clusters: BTreeSet<usize> = labels.iter().copied().collect();
    (0..points.len())
        .map(|i| {
            let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
            for j in 0..points.len() {
                if i != j {
                    let e = sums.entry(labels[j]).or_insert((0.0, 0));
                    e.0 += dist(points[i], points[j]);
                    e.1 += 1;
                }
            }
            let Some(&(sa, na)) = sums.get(&labels[i]) else {
                return 0.0;
            };
            let a = sa / na as f64;
            let b = clusters
                .iter()
                .filter(|&&c| c != labels[i])
                .filter_map(|c| sums.get(c).map(|&(s, n)| s / n as f64))
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect()
}

/// Clusters synthetic trajectory centroids by density, assigns the real centroids
/// to the nearest synthetic cluster and reports their mean silhouette.
pub fn trajectory_clustering_silhouette(
    syn: &Dataset,
    real: &Dataset,
    params: &ClusterParams,
) -> Result<MetricResult> {
    let sc: Vec<[f64; 2]> = syn.trajectories().iter().map(|t| t.centroid()).collect();
    let rc: Vec<[f64; 2]> = real.trajectories().iter().map(|t| t.centroid()).collect();
    let assigned = assign_to_synthetic_clusters(&sc, &rc, params)?;
    let (pts, labels): (Vec<[f64; 2]>, Vec<usize>) = rc
        .iter()
        .zip(&assigned)
        .filter_map(|(&p, l)| l.map(|l| (p, l)))
        .unzip();
    let used: BTreeSet<usize> = labels.iter().copied().collect();
    if used.len() < 2 {
        return Err(Error::Undefined(
            "real centroids fall into fewer than two synthetic clusters".into(),
        ));
    }
    let s = silhouette_scores(&pts, &labels);
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let noise = rc.len() - pts.len();
    Ok(
        MetricResult::value(MetricId::TrajectoryClustering, mean).with_note(format!(
            "real centroids labelled noise: {noise}; clusters used: {}",
            used.len()
        )),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DiscretizedTrajectory, GridSpec};
    use crate::metrics::build_transition_matrix;
    use crate::mobility::{DatasetMeta, TrajPoint, Trajectory};
    use approx::assert_abs_diff_eq;

    fn c(i: i64) -> CellId {
        CellId::new(i, 0)
    }

    fn dd(seqs: &[&[i64]]) -> DiscretizedDataset {
        DiscretizedDataset {
            grid: GridSpec::new(100.0).unwrap(),
            trajectories: seqs
                .iter()
                .enumerate()
                .map(|(i, s)| DiscretizedTrajectory {
                    traj_id: format!("t{i}"),
                    user_id: format!("u{i}"),
                    cells: s.iter().map(|&x| c(x)).collect(),
                    timestamps: vec![0.0; s.len()],
                    categories: vec![None; s.len()],
                })
                .collect(),
        }
    }

    #[test]
    fn deterministic_chain_is_fully_predictable() {
        let d = dd(&[&[0, 1, 2, 3, 0, 1], &[2, 3, 0]]);
        let tm = build_transition_matrix(&d).unwrap();
        let m = next_location_prediction(&tm, &d, 10).unwrap();
        assert_eq!(m.unwrap_value(), 1.0);
        assert_eq!(
            next_location_prediction(&tm, &d, 1).unwrap().unwrap_value(),
            1.0
        );
    }

    #[test]
    fn sinks_predict_uniformly() {
        let empty = TransitionMatrix::from_counts(BTreeMap::new()).unwrap();
        let d = dd(&[&[0, 3, 1, 2]]);
        assert_eq!(
            next_location_prediction(&empty, &d, 10)
                .unwrap()
                .unwrap_value(),
            1.0
        );
        // with k = 2 the uniform candidates are cells 0 and 1
        assert_abs_diff_eq!(
            next_location_prediction(&empty, &d, 2)
                .unwrap()
                .unwrap_value(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn four_state_step_by_step() {
        // syn: 0->1 (3), 0->2 (1), 1->3 (1), 2 is a sink
        let mut counts = BTreeMap::new();
        counts.insert(c(0), BTreeMap::from([(c(1), 3.0), (c(2), 1.0)]));
        counts.insert(c(1), BTreeMap::from([(c(3), 1.0)]));
        let syn = TransitionMatrix::from_counts(counts).unwrap();
        // k = 1: 0->1 hit, 1->3 hit; 0->2 miss; 2->0 uniform top-1 = cell 0 hit
        let real = dd(&[&[0, 1, 3], &[0, 2, 0]]);
        let m = next_location_prediction(&syn, &real, 1).unwrap();
        assert_abs_diff_eq!(m.unwrap_value(), (1.0 + 0.5) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn markovian_flow_has_zero_error() {
        let d = dd(&[&[0, 1, 2, 0, 1], &[1, 2, 0, 1, 2], &[2, 0, 1, 2, 0]]);
        let tm = build_transition_matrix(&d).unwrap();
        assert_eq!(global_flow_prediction(&tm, &d).unwrap().unwrap_value(), 0.0);
        let static_pop = dd(&[&[4, 4, 4], &[7, 7, 7]]);
        let ident = build_transition_matrix(&static_pop).unwrap();
        assert_eq!(
            global_flow_prediction(&ident, &static_pop)
                .unwrap()
                .unwrap_value(),
            0.0
        );
    }

    #[test]
    fn two_step_three_state_by_hand() {
        // population at step 0: {0: 1, 1: 1}; step 1: {1: 1, 2: 1}; horizon N = 2
        let real = dd(&[&[0, 1], &[1, 2]]);
        // syn: 0 -> 0, 1 -> 2
        let mut counts = BTreeMap::new();
        counts.insert(c(0), BTreeMap::from([(c(0), 1.0)]));
        counts.insert(c(1), BTreeMap::from([(c(2), 1.0)]));
        let syn = TransitionMatrix::from_counts(counts).unwrap();
        // predicted {0: 1/2, 2: 1/2} vs observed {1: 1/2, 2: 1/2}: move 1/2 over one cell
        // of a 2-cell diameter -> 1/4
        let m = global_flow_prediction(&syn, &real).unwrap();
        assert_abs_diff_eq!(m.unwrap_value(), 0.25, epsilon = 1e-12);
    }

    fn centroids_ds(cs: &[(f64, f64)]) -> Dataset {
        let t = cs
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                Trajectory::new(
                    format!("t{i}"),
                    format!("u{i}"),
                    vec![TrajPoint::new(x, y, 0.0)],
                )
                .unwrap()
            })
            .collect();
        Dataset::new(t, DatasetMeta::projected("c")).unwrap()
    }

    #[test]
    fn far_clusters_score_near_one() {
        let cs = [(0.0, 0.0), (10.0, 0.0), (10000.0, 0.0), (10010.0, 0.0)];
        let d = centroids_ds(&cs);
        let p = ClusterParams {
            eps_m: 100.0,
            min_samples: 2,
        };
        let s = trajectory_clustering_silhouette(&d, &d, &p)
            .unwrap()
            .unwrap_value();
        // hand computation: outer points have a = 10, b = 10005; inner points b = 9995
        let expected = ((10005.0 - 10.0) / 10005.0 + (9995.0 - 10.0) / 9995.0) / 2.0;
        assert_abs_diff_eq!(s, expected, epsilon = 1e-12);
        assert!(s > 0.9);
    }

    #[test]
    fn equidistant_point_scores_zero() {
        let pts = [[0.0, 0.0], [2.0, 0.0], [1.0, 0.0]];
        let s = silhouette_scores(&pts, &[0, 1, 0]);
        assert_eq!(s[2], 0.0);
    }

    #[test]
    fn single_cluster_is_undefined() {
        let d = centroids_ds(&[(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)]);
        let p = ClusterParams {
            eps_m: 100.0,
            min_samples: 2,
        };
        assert!(trajectory_clustering_silhouette(&d, &d, &p).is_err());
    }
}
