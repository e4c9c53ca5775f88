//! Utility metrics, each registered under one cell of the level x notion taxonomy.
//!
//! Metrics never compare a real record with a synthetic record directly: every
//! cross-dataset comparison is between distributions or aggregate statistics.

mod evaluate;
mod layers;
mod realism;
mod statistics;
mod task;
mod transition;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use evaluate::{evaluate_metric, Environment, GridPair, MetricParams};
pub use layers::{
    ConstraintLayers, RoadEdge, RoadGraph, DEFAULT_DELTA_M, IMPLAUSIBLE_FILE, INFRASTRUCTURE_FILE,
    ROADS_FILE,
};
pub use realism::{
    category_location_match, location_implausibility, map_reconstruction_metric, point_violation,
    reconstruct_infrastructure, trajectory_implausibility, CategoryMatchParams,
};
pub use statistics::{
    average_speed_metric, categorical_g_rank, g_rank_metric, i_rank_metric, i_rank_scores,
    pairwise_distances, pairwise_similarity_metric, trajectory_average_speed,
    traveled_distance_metric, PairwiseKind,
};
pub use task::{
    assign_to_synthetic_clusters, global_flow_prediction, next_location_prediction,
    silhouette_scores, trajectory_clustering_silhouette, ClusterParams,
};
pub use transition::{
    build_transition_matrix, transition_probability_metric, transition_probability_on_grid,
    TransitionMatrix,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Trajectory,
    Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Notion {
    MarginalStats,
    RelationalStats,
    Realism,
    Task,
}

/// One of the eight level x notion combinations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaxonomyCell {
    pub level: Level,
    pub notion: Notion,
}

impl TaxonomyCell {
    pub const ALL: [TaxonomyCell; 8] = [
        TaxonomyCell::new(Level::Trajectory, Notion::MarginalStats),
        TaxonomyCell::new(Level::Trajectory, Notion::RelationalStats),
        TaxonomyCell::new(Level::Trajectory, Notion::Realism),
        TaxonomyCell::new(Level::Trajectory, Notion::Task),
        TaxonomyCell::new(Level::Point, Notion::MarginalStats),
        TaxonomyCell::new(Level::Point, Notion::RelationalStats),
        TaxonomyCell::new(Level::Point, Notion::Realism),
        TaxonomyCell::new(Level::Point, Notion::Task),
    ];

    pub const fn new(level: Level, notion: Notion) -> Self {
        Self { level, notion }
    }

    /// Stable key such as `trajectory.marginal-stats`.
    pub fn key(&self) -> String {
        let level = match self.level {
            Level::Trajectory => "trajectory",
            Level::Point => "point",
        };
        let notion = match self.notion {
            Notion::MarginalStats => "marginal-stats",
            Notion::RelationalStats => "relational-stats",
            Notion::Realism => "realism",
            Notion::Task => "task",
        };
        format!("{level}.{notion}")
    }

    pub fn from_key(key: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.key() == key)
            .ok_or_else(|| Error::InvalidSelection(format!("unknown taxonomy cell `{key}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    LowerIsBetter,
    HigherIsBetter,
}

/// Metric identifiers. Some taxonomy entries are registered without an implementation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricId {
    IRank,
    AverageSpeed,
    TraveledDistance,
    WaitingTime,
    OdSpatialDensity,
    PairwiseHausdorff,
    PairwiseCosine,
    PairwiseFrechet,
    PairwiseDtw,
    TrajectoryImplausibility,
    MapReconstruction,
    Reachability,
    TimeReversal,
    TrajectoryClustering,
    NextLocationPrediction,
    GRank,
    CategoricalGRank,
    TemporalActivity,
    TransitionProbability,
    SpatialCoOccurrence,
    LocationImplausibility,
    CategoryLocationMatch,
    GlobalFlowPrediction,
    CrowdDensityPrediction,
}

impl MetricId {
    pub const ALL: [MetricId; 24] = [
        MetricId::IRank,
        MetricId::AverageSpeed,
        MetricId::TraveledDistance,
        MetricId::WaitingTime,
        MetricId::OdSpatialDensity,
        MetricId::PairwiseHausdorff,
        MetricId::PairwiseCosine,
        MetricId::PairwiseFrechet,
        MetricId::PairwiseDtw,
        MetricId::TrajectoryImplausibility,
        MetricId::MapReconstruction,
        MetricId::Reachability,
        MetricId::TimeReversal,
        MetricId::TrajectoryClustering,
        MetricId::NextLocationPrediction,
        MetricId::GRank,
        MetricId::CategoricalGRank,
        MetricId::TemporalActivity,
        MetricId::TransitionProbability,
        MetricId::SpatialCoOccurrence,
        MetricId::LocationImplausibility,
        MetricId::CategoryLocationMatch,
        MetricId::GlobalFlowPrediction,
        MetricId::CrowdDensityPrediction,
    ];

    pub fn id(&self) -> &'static str {
        use MetricId::*;
        match self {
            IRank => "i-rank",
            AverageSpeed => "average-speed",
            TraveledDistance => "traveled-distance",
            WaitingTime => "waiting-time",
            OdSpatialDensity => "od-spatial-density",
            PairwiseHausdorff => "pairwise-hausdorff",
            PairwiseCosine => "pairwise-cosine",
            PairwiseFrechet => "pairwise-frechet",
            PairwiseDtw => "pairwise-dtw",
            TrajectoryImplausibility => "trajectory-implausibility",
            MapReconstruction => "map-reconstruction",
            Reachability => "reachability",
            TimeReversal => "time-reversal",
            TrajectoryClustering => "trajectory-clustering",
            NextLocationPrediction => "next-location-prediction",
            GRank => "g-rank",
            CategoricalGRank => "categorical-g-rank",
            TemporalActivity => "temporal-activity",
            TransitionProbability => "transition-probability",
            SpatialCoOccurrence => "spatial-co-occurrence",
            LocationImplausibility => "location-implausibility",
            CategoryLocationMatch => "category-location-match",
            GlobalFlowPrediction => "global-flow-prediction",
            CrowdDensityPrediction => "crowd-density-prediction",
        }
    }

    /// Human-readable column title.
    pub fn title(&self) -> &'static str {
        use MetricId::*;
        match self {
            IRank => "I-rank",
            AverageSpeed => "Average speed",
            TraveledDistance => "Traveled distance",
            WaitingTime => "Waiting time",
            OdSpatialDensity => "OD spatial density",
            PairwiseHausdorff => "Hausdorff distance",
            PairwiseCosine => "Cosine similarity",
            PairwiseFrechet => "Fréchet distance",
            PairwiseDtw => "Dynamic time warping",
            TrajectoryImplausibility => "Trajectory implausibility",
            MapReconstruction => "Map reconstruction",
            Reachability => "Reachability",
            TimeReversal => "Time reversal ratio",
            TrajectoryClustering => "Trajectory clustering",
            NextLocationPrediction => "Next location prediction",
            GRank => "G-rank",
            CategoricalGRank => "Categorical G-rank",
            TemporalActivity => "Temporal activity",
            TransitionProbability => "Transition probabilities",
            SpatialCoOccurrence => "Spatial co-occurrence",
            LocationImplausibility => "Location implausibility",
            CategoryLocationMatch => "Category-location match",
            GlobalFlowPrediction => "Global flow prediction",
            CrowdDensityPrediction => "Crowd density prediction",
        }
    }

    pub fn cell(&self) -> TaxonomyCell {
        use Level::*;
        use MetricId::*;
        use Notion::*;
        let (level, notion) = match self {
            IRank | AverageSpeed | TraveledDistance | WaitingTime | OdSpatialDensity => {
                (Trajectory, MarginalStats)
            }
            PairwiseHausdorff | PairwiseCosine | PairwiseFrechet | PairwiseDtw => {
                (Trajectory, RelationalStats)
            }
            TrajectoryImplausibility | MapReconstruction | Reachability | TimeReversal => {
                (Trajectory, Realism)
            }
            TrajectoryClustering | NextLocationPrediction => (Trajectory, Task),
            GRank | CategoricalGRank | TemporalActivity => (Point, MarginalStats),
            TransitionProbability | SpatialCoOccurrence => (Point, RelationalStats),
            LocationImplausibility | CategoryLocationMatch => (Point, Realism),
            GlobalFlowPrediction | CrowdDensityPrediction => (Point, Task),
        };
        TaxonomyCell::new(level, notion)
    }

    pub fn direction(&self) -> Direction {
        use MetricId::*;
        match self {
            GRank
            | CategoricalGRank
            | CategoryLocationMatch
            | NextLocationPrediction
            | TrajectoryClustering => Direction::HigherIsBetter,
            _ => Direction::LowerIsBetter,
        }
    }

    /// Short description of the reported quantity, e.g. `W1 (km/h)`.
    pub fn units(&self) -> &'static str {
        use MetricId::*;
        match self {
            IRank | PairwiseCosine => "W1",
            AverageSpeed => "W1 (km/h)",
            TraveledDistance | PairwiseHausdorff | PairwiseFrechet | PairwiseDtw => "W1 (km)",
            TransitionProbability => "W1",
            GRank | CategoricalGRank => "tau_b",
            TrajectoryImplausibility | LocationImplausibility | CategoryLocationMatch => "Ratio",
            MapReconstruction => "Mean km",
            NextLocationPrediction => "Mean acc@k",
            GlobalFlowPrediction => "Mean W1",
            TrajectoryClustering => "Silhouette score",
            _ => "",
        }
    }

    pub fn implemented(&self) -> bool {
        use MetricId::*;
        !matches!(
            self,
            WaitingTime
                | OdSpatialDensity
                | Reachability
                | TimeReversal
                | TemporalActivity
                | SpatialCoOccurrence
                | CrowdDensityPrediction
        )
    }

    /// Whether the metric needs per-point category labels.
    pub fn needs_categories(&self) -> bool {
        matches!(
            self,
            MetricId::PairwiseCosine | MetricId::CategoricalGRank | MetricId::CategoryLocationMatch
        )
    }

    /// Whether the metric works on the discretised datasets.
    pub fn grid_based(&self) -> bool {
        use MetricId::*;
        matches!(
            self,
            IRank
                | GRank
                | TransitionProbability
                | CategoryLocationMatch
                | NextLocationPrediction
                | GlobalFlowPrediction
        )
    }

    pub fn needs_layers(&self) -> bool {
        matches!(
            self,
            MetricId::TrajectoryImplausibility
                | MetricId::LocationImplausibility
                | MetricId::MapReconstruction
        )
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::InvalidSelection(format!("unknown metric `{s}`")))
    }
}

/// Outcome of one metric evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "kebab-case")]
pub enum MetricValue {
    Value(f64),
    /// The metric does not apply to this input (rendered as N/A).
    NotApplicable(String),
    Failed(String),
}

impl MetricValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub metric: MetricId,
    pub cell: TaxonomyCell,
    pub direction: Direction,
    pub units: String,
    pub value: MetricValue,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MetricResult {
    pub fn new(metric: MetricId, value: MetricValue) -> Self {
        Self {
            metric,
            cell: metric.cell(),
            direction: metric.direction(),
            units: metric.units().to_string(),
            value,
            notes: Vec::new(),
        }
    }

    pub fn value(metric: MetricId, v: f64) -> Self {
        Self::new(metric, MetricValue::Value(v))
    }

    pub fn not_applicable(metric: MetricId, reason: impl Into<String>) -> Self {
        Self::new(metric, MetricValue::NotApplicable(reason.into()))
    }

    pub fn failed(metric: MetricId, reason: impl Into<String>) -> Self {
        Self::new(metric, MetricValue::Failed(reason.into()))
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// The numeric value; panics on N/A or failure. Convenient in tests.
    pub fn unwrap_value(&self) -> f64 {
        self.value
            .as_f64()
            .unwrap_or_else(|| panic!("{} has no value: {:?}", self.metric, self.value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for m in MetricId::ALL {
            assert_eq!(m.id().parse::<MetricId>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.id()));
        }
        assert!("no-such-metric".parse::<MetricId>().is_err());
    }

    #[test]
    fn every_cell_has_an_implemented_metric() {
        for cell in TaxonomyCell::ALL {
            assert!(MetricId::ALL
                .iter()
                .any(|m| m.cell() == cell && m.implemented()));
            assert_eq!(TaxonomyCell::from_key(&cell.key()).unwrap(), cell);
        }
    }
}
