//! Privacy audits of blurring models: threshold membership inference in three
//! attacker scenarios, and trajectory-user linking under two evaluation protocols.

mod distance;
mod mia;
mod tul;

pub use distance::{
    compute_alpha, custom_distance, Alpha, DistanceKind, FeatureWeights, LengthFilter,
    ReleasedIndex, TrajectoryDistance, MAX_RELAXATION,
};
pub use mia::{
    decide, learn_threshold, run_attack, split_aux, write_scores_csv, write_targets_csv,
    AttackConfig, AttackResult, AuxSplit, Decision, ModelFactory, Scenario, SeedRun, TargetScore,
    TargetSetup, ThresholdModel, DEFAULT_AUX_FRACTIONS,
};
pub use tul::{
    linking_accuracy, tul_protocols, HeuristicTulSolver, TulData, TulProtocol, TulResult, TulSolver,
};
