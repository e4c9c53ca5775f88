//! Generator interfaces and reference implementations.
//!
//! A [`BlurringModel`] transforms real records one-to-one at inference time; a
//! [`SyntheticModel`] samples from noise after fitting. The reference models here
//! stand in for neural generators: the identity blurrer memorises perfectly, the
//! marginal resampler never sees an inference-time record.

mod blur;
mod resampler;

use serde::{Deserialize, Serialize};

pub use blur::{GaussianJitterBlurrer, GridSnapBlurrer, IdentityBlurrer};
pub use resampler::{MarginalModel, MarginalResampler};

use crate::error::{Error, Result};
use crate::mobility::{Crs, Dataset, GeoPoint, Trajectory};

/// Transforms each record of a query set, preserving order and count.
pub trait BlurringModel: Send + Sync {
    fn name(&self) -> &str;

    /// Learns from training data. Reference blurrers without state accept anything.
    fn fit(&mut self, train: &Dataset) -> Result<()>;

    /// `|output| == |q|`, record `i` of the output derived from record `i` of `q`.
    /// Randomness comes only from `seed`.
    fn blur(&self, q: &Dataset, seed: u64) -> Result<Dataset>;
}

/// Samples a dataset from noise after fitting.
pub trait SyntheticModel: Send + Sync {
    fn fit(&mut self, train: &Dataset) -> Result<()>;

    fn sample(&self, n: usize, seed: u64) -> Result<Dataset>;
}

/// Generator choice and parameters as found in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Identity,
    GaussianJitter {
        sigma_m: f64,
        #[serde(default)]
        flip_prob: f64,
    },
    GridSnap {
        cell_edge_m: f64,
    },
    MarginalResampler {
        cell_edge_m: f64,
    },
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            GeneratorSpec::GaussianJitter { sigma_m, flip_prob } => {
                if !(sigma_m >= 0.0 && sigma_m.is_finite()) {
                    return bad(format!("sigma_m must be >= 0, got {sigma_m}"));
                }
                if !(0.0..=1.0).contains(&flip_prob) {
                    return bad(format!("flip_prob must be in [0, 1], got {flip_prob}"));
                }
            }
            GeneratorSpec::GridSnap { cell_edge_m }
            | GeneratorSpec::MarginalResampler { cell_edge_m } => {
                if !(cell_edge_m > 0.0 && cell_edge_m.is_finite()) {
                    return bad(format!("cell_edge_m must be positive, got {cell_edge_m}"));
                }
            }
            GeneratorSpec::Identity => {}
        }
        Ok(())
    }

    /// Builds an unfitted blurring model.
    pub fn build(&self) -> Result<Box<dyn BlurringModel>> {
        self.validate()?;
        Ok(match *self {
            GeneratorSpec::Identity => Box::new(IdentityBlurrer),
            GeneratorSpec::GaussianJitter { sigma_m, flip_prob } => {
                Box::new(GaussianJitterBlurrer::new(sigma_m, flip_prob)?)
            }
            GeneratorSpec::GridSnap { cell_edge_m } => Box::new(GridSnapBlurrer::new(
                crate::grid::GridSpec::new(cell_edge_m)?,
            )),
            GeneratorSpec::MarginalResampler { cell_edge_m } => Box::new(MarginalResampler::new(
                crate::grid::GridSpec::new(cell_edge_m)?,
            )),
        })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s)
            .map_err(|e| Error::InvalidParameter(format!("generator config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Output record id for position `i`; never reuses an input id.
pub(crate) fn fresh_id(model: &str, i: usize) -> String {
    format!("{model}-{i:06}")
}

/// A point moved to (x, y), keeping geographic coordinates consistent with the CRS.
pub(crate) fn moved(crs: &Crs, x: f64, y: f64) -> GeoPoint {
    GeoPoint {
        x,
        y,
        lat_lon: crs.projection().map(|p| p.inverse(x, y)),
    }
}

/// Assembles the output dataset of a generator from per-record results.
pub(crate) fn output_dataset(q: &Dataset, model: &str, trajs: Vec<Trajectory>) -> Result<Dataset> {
    q.derive(format!("{}-{model}", q.meta().name), trajs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing_and_validation() {
        let s =
            GeneratorSpec::from_toml_str("kind = \"gaussian-jitter\"\nsigma_m = 50.0\n").unwrap();
        assert_eq!(
            s,
            GeneratorSpec::GaussianJitter {
                sigma_m: 50.0,
                flip_prob: 0.0
            }
        );
        assert!(
            GeneratorSpec::from_toml_str("kind = \"gaussian-jitter\"\nsigma_m = -1.0\n").is_err()
        );
        assert!(GeneratorSpec::from_toml_str("kind = \"grid-snap\"\ncell_edge_m = 0.0\n").is_err());
        assert_eq!(GeneratorSpec::Identity.build().unwrap().name(), "identity");
    }
}
