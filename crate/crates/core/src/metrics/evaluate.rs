//! Evaluation of any implemented metric by id.

use serde::{Deserialize, Serialize};

use super::layers::{ConstraintLayers, DEFAULT_DELTA_M};
use super::realism::{
    category_location_match, location_implausibility, map_reconstruction_metric,
    trajectory_implausibility, CategoryMatchParams,
};
use super::statistics::{
    average_speed_metric, categorical_g_rank, g_rank_metric, i_rank_metric,
    pairwise_similarity_metric, traveled_distance_metric, PairwiseKind,
};
use super::task::{
    global_flow_prediction, next_location_prediction, trajectory_clustering_silhouette,
    ClusterParams,
};
use super::transition::{
    build_transition_matrix, transition_probability_on_grid, TransitionMatrix,
};
use super::{MetricId, MetricResult};
use crate::error::{Error, Result};
use crate::grid::{discretize, DiscretizedDataset, GridSpec};
use crate::mobility::Dataset;

/// Tunable metric parameters; every field has the published default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricParams {
    /// Candidate-set size for next-location prediction.
    pub k: usize,
    /// GPS tolerance for the implausibility metrics, meters.
    pub delta_m: f64,
    pub k_min: usize,
    pub dominance: f64,
    pub eps_m: f64,
    pub min_samples: usize,
}

impl Default for MetricParams {
    fn default() -> Self {
        let cm = CategoryMatchParams::default();
        let cl = ClusterParams::default();
        Self {
            k: 10,
            delta_m: DEFAULT_DELTA_M,
            k_min: cm.k_min,
            dominance: cm.dominance,
            eps_m: cl.eps_m,
            min_samples: cl.min_samples,
        }
    }
}

impl MetricParams {
    pub fn category_match(&self) -> CategoryMatchParams {
        CategoryMatchParams {
            k_min: self.k_min,
            dominance: self.dominance,
        }
    }

    pub fn cluster(&self) -> ClusterParams {
        ClusterParams {
            eps_m: self.eps_m,
            min_samples: self.min_samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.k >= 1
            && self.delta_m >= 0.0
            && (0.0..=1.0).contains(&self.dominance)
            && self.eps_m > 0.0
            && self.min_samples >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "metric parameters out of range: {self:?}"
            )))
        }
    }
}

/// External inputs some metrics need.
#[derive(Clone, Copy, Debug, Default)]
pub struct Environment<'a> {
    pub grid: Option<GridSpec>,
    pub layers: Option<&'a ConstraintLayers>,
}

impl<'a> Environment<'a> {
    pub fn grid(&self) -> Result<GridSpec> {
        self.grid
            .ok_or_else(|| Error::MissingEnvironment("grid-based metric without a grid".into()))
    }

    pub fn layers(&self) -> Result<&'a ConstraintLayers> {
        self.layers.ok_or_else(|| {
            Error::MissingEnvironment("realism metric without constraint layers".into())
        })
    }
}

/// Both datasets on one grid, plus the synthetic chain.
pub struct GridPair<'a> {
    pub real: &'a Dataset,
    pub syn: &'a Dataset,
    pub grid: GridSpec,
    pub real_dd: DiscretizedDataset,
    pub syn_dd: DiscretizedDataset,
    syn_tm: Result<TransitionMatrix, String>,
}

impl<'a> GridPair<'a> {
    pub fn new(real: &'a Dataset, syn: &'a Dataset, grid: GridSpec) -> Self {
        let syn_dd = discretize(syn, &grid);
        let syn_tm = build_transition_matrix(&syn_dd).map_err(|e| e.to_string());
        Self {
            real,
            syn,
            grid,
            real_dd: discretize(real, &grid),
            syn_dd,
            syn_tm,
        }
    }

    fn syn_chain(&self) -> Result<&TransitionMatrix> {
        self.syn_tm
            .as_ref()
            .map_err(|e| Error::Undefined(format!("synthetic chain: {e}")))
    }

    /// Evaluates one grid-based metric.
    pub fn evaluate(&self, id: MetricId, params: &MetricParams) -> Result<MetricResult> {
        match id {
            MetricId::IRank => i_rank_metric(&self.real_dd, &self.syn_dd),
            MetricId::GRank => g_rank_metric(&self.real_dd, &self.syn_dd),
            MetricId::TransitionProbability => {
                transition_probability_on_grid(&self.real_dd, &self.syn_dd)
            }
            MetricId::CategoryLocationMatch => {
                category_location_match(self.real, self.syn, &self.grid, &params.category_match())
            }
            MetricId::NextLocationPrediction => {
                next_location_prediction(self.syn_chain()?, &self.real_dd, params.k)
            }
            MetricId::GlobalFlowPrediction => {
                global_flow_prediction(self.syn_chain()?, &self.real_dd)
            }
            other => Err(Error::InvalidSelection(format!(
                "{other} is not grid-based"
            ))),
        }
    }
}

/// Evaluates `id` comparing `syn` against `real`. Single-dataset metrics
/// (implausibility ratios) are computed on `syn`.
pub fn evaluate_metric(
    id: MetricId,
    real: &Dataset,
    syn: &Dataset,
    env: &Environment<'_>,
    params: &MetricParams,
) -> Result<MetricResult> {
    if !id.implemented() {
        return Err(Error::InvalidSelection(format!(
            "metric {id} is not implemented"
        )));
    }
    params.validate()?;
    if id.grid_based() {
        return GridPair::new(real, syn, env.grid()?).evaluate(id, params);
    }
    match id {
        MetricId::AverageSpeed => average_speed_metric(real, syn),
        MetricId::TraveledDistance => traveled_distance_metric(real, syn),
        MetricId::PairwiseHausdorff => {
            pairwise_similarity_metric(real, syn, PairwiseKind::Hausdorff)
        }
        MetricId::PairwiseCosine => pairwise_similarity_metric(real, syn, PairwiseKind::Cosine),
        MetricId::PairwiseFrechet => pairwise_similarity_metric(real, syn, PairwiseKind::Frechet),
        MetricId::PairwiseDtw => pairwise_similarity_metric(real, syn, PairwiseKind::Dtw),
        MetricId::CategoricalGRank => categorical_g_rank(real, syn),
        MetricId::TrajectoryImplausibility => {
            trajectory_implausibility(syn, env.layers()?, params.delta_m)
        }
        MetricId::LocationImplausibility => {
            location_implausibility(syn, env.layers()?, params.delta_m)
        }
        MetricId::MapReconstruction => map_reconstruction_metric(real, syn, env.layers()?),
        MetricId::TrajectoryClustering => {
            trajectory_clustering_silhouette(syn, real, &params.cluster())
        }
        other => unreachable!("{other} is implemented but not dispatched"),
    }
}
