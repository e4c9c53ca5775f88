//! Distances between distributions, rankings and point sequences.

mod distribution;
mod kendall;
mod sequence;
mod transport;
mod wasserstein;

pub use distribution::EmpiricalDistribution;
pub use kendall::{kendall_tau_b, RankVector};
pub use sequence::{cosine_distance, discrete_frechet, dtw, hausdorff};
pub use transport::{solve_transport, TransportPlan};
pub use wasserstein::{
    optimal_plan, spatial_ground_cost, wasserstein1_ground_cost, wasserstein1_scalar,
    GroundCostMatrix, SpatialCost,
};

/// Tolerance for weight normalisation and plan feasibility.
pub const WEIGHT_TOL: f64 = 1e-9;
