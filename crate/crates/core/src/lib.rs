//! Utility evaluation and privacy auditing for synthetic human-mobility data.
//!
//! The crate is organised bottom-up:
//!
//! - [`mobility`]: trajectories, datasets, CSV ingestion, splitting, masking, profiling.
//! - [`grid`]: absolute uniform discretisation, cell-size selection, stability sweeps.
//! - [`measures`]: exact 1-Wasserstein (network simplex), Kendall tau-b, Hausdorff,
//!   discrete Fréchet, DTW, cosine distance.
//! - [`metrics`]: the utility metrics, each tagged with its taxonomy cell.
//! - [`framework`]: metric selections, utility vectors and comparison reports.
//! - [`generators`]: blurring / synthetic generator interfaces and reference models.
//! - [`privacy`]: threshold membership inference and trajectory-user-linking protocols.

pub mod error;
pub mod framework;
pub mod generators;
pub mod grid;
pub mod measures;
pub mod metrics;
pub mod mobility;
pub mod privacy;

pub use error::{Error, Result};
