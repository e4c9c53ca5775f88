//! Which metrics fill each taxonomy cell, and with what parameters.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricId, MetricParams, TaxonomyCell};

/// Names of the built-in selections.
pub const PRESETS: [&str; 2] = ["use-case-a", "use-case-b"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricEntry {
    pub metric: MetricId,
    #[serde(default)]
    pub params: MetricParams,
}

impl MetricEntry {
    pub fn new(metric: MetricId) -> Self {
        Self {
            metric,
            params: MetricParams::default(),
        }
    }
}

/// One or more metrics per taxonomy cell. Entries are ordered by cell (trajectory
/// level first, then marginal, relational, realism, task), then by insertion.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSelection {
    pub name: String,
    /// Shared grid edge; derived from the real dataset when absent.
    pub cell_edge_m: Option<f64>,
    cells: BTreeMap<TaxonomyCell, Vec<MetricEntry>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cell_edge_m: Option<f64>,
    cells: BTreeMap<String, Vec<MetricEntry>>,
}

impl MetricSelection {
    /// Builds and validates a selection.
    pub fn new(
        name: impl Into<String>,
        entries: impl IntoIterator<Item = MetricEntry>,
    ) -> Result<Self> {
        let mut cells: BTreeMap<TaxonomyCell, Vec<MetricEntry>> = BTreeMap::new();
        for e in entries {
            cells.entry(e.metric.cell()).or_default().push(e);
        }
        let sel = Self {
            name: name.into(),
            cell_edge_m: None,
            cells,
        };
        sel.validate()?;
        Ok(sel)
    }

    pub fn with_cell_edge(mut self, edge_m: f64) -> Result<Self> {
        self.cell_edge_m = Some(edge_m);
        self.validate()?;
        Ok(self)
    }

    pub fn preset(name: &str) -> Result<Self> {
        use MetricId::*;
        let ids = match name {
            "use-case-a" => [
                IRank,
                PairwiseCosine,
                TrajectoryImplausibility,
                TrajectoryClustering,
                CategoricalGRank,
                TransitionProbability,
                CategoryLocationMatch,
                GlobalFlowPrediction,
            ],
            "use-case-b" => [
                AverageSpeed,
                PairwiseHausdorff,
                MapReconstruction,
                NextLocationPrediction,
                GRank,
                TransitionProbability,
                LocationImplausibility,
                GlobalFlowPrediction,
            ],
            other => {
                return Err(Error::InvalidSelection(format!(
                    "unknown preset `{other}`; available: {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Self::new(name, ids.into_iter().map(MetricEntry::new))
    }

    /// Every cell non-empty, every metric implemented and filed under its own cell,
    /// parameters in range.
    pub fn validate(&self) -> Result<()> {
        for cell in TaxonomyCell::ALL {
            let entries = self.cells.get(&cell).map(Vec::as_slice).unwrap_or(&[]);
            if entries.is_empty() {
                return Err(Error::InvalidSelection(format!(
                    "no metric selected for cell {}",
                    cell.key()
                )));
            }
            for e in entries {
                if e.metric.cell() != cell {
                    return Err(Error::InvalidSelection(format!(
                        "{} belongs to {}, not {}",
                        e.metric,
                        e.metric.cell().key(),
                        cell.key()
                    )));
                }
                if !e.metric.implemented() {
                    return Err(Error::InvalidSelection(format!(
                        "metric {} is not implemented",
                        e.metric
                    )));
                }
                e.params.validate()?;
            }
        }
        if let Some(edge) = self.cell_edge_m {
            if !(edge > 0.0 && edge.is_finite()) {
                return Err(Error::InvalidSelection(format!(
                    "cell_edge_m must be positive, got {edge}"
                )));
            }
        }
        Ok(())
    }

    /// Entries in report order.
    pub fn entries(&self) -> impl Iterator<Item = &MetricEntry> {
        self.cells.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn needs_grid(&self) -> bool {
        self.entries().any(|e| e.metric.grid_based())
    }

    pub fn needs_layers(&self) -> bool {
        self.entries().any(|e| e.metric.needs_layers())
    }

    /// Parses the TOML form:
    ///
    /// ```toml
    /// name = "mine"
    /// cell_edge_m = 500.0
    /// [cells]
    /// "trajectory.task" = [{ metric = "next-location-prediction", params = { k = 5 } }]
    /// ```
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: SelectionFile =
            toml::from_str(s).map_err(|e| Error::InvalidSelection(format!("config: {e}")))?;
        let mut cells = BTreeMap::new();
        for (key, entries) in file.cells {
            cells.insert(TaxonomyCell::from_key(&key)?, entries);
        }
        let sel = Self {
            name: file.name,
            cell_edge_m: file.cell_edge_m,
            cells,
        };
        sel.validate()?;
        Ok(sel)
    }

    pub fn to_toml_string(&self) -> String {
        let file = SelectionFile {
            name: self.name.clone(),
            cell_edge_m: self.cell_edge_m,
            cells: self
                .cells
                .iter()
                .map(|(c, e)| (c.key(), e.clone()))
                .collect(),
        };
        toml::to_string(&file).expect("selection serialises")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }
}
