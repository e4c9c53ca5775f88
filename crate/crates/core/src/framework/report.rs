//! Utility vectors and their cross-model comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::selection::MetricSelection;
use crate::error::{Error, Result};
use crate::grid::{select_cell_size, GridSpec};
use crate::metrics::{
    evaluate_metric, ConstraintLayers, Direction, Environment, GridPair, MetricId, MetricResult,
    MetricValue, TaxonomyCell,
};
use crate::mobility::Dataset;

/// One model's scores, one entry per selected metric, in selection order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityVector {
    pub model: String,
    pub entries: Vec<MetricResult>,
}

impl UtilityVector {
    pub fn get(&self, metric: MetricId) -> Option<&MetricResult> {
        self.entries.iter().find(|e| e.metric == metric)
    }

    pub fn value(&self, metric: MetricId) -> Option<f64> {
        self.get(metric).and_then(|r| r.value.as_f64())
    }

    /// Entries that failed (not N/A).
    pub fn failures(&self) -> impl Iterator<Item = &MetricResult> {
        self.entries
            .iter()
            .filter(|e| matches!(e.value, MetricValue::Failed(_)))
    }
}

/// The grid every grid-based metric of a comparison shares: the selection's edge if
/// set, otherwise the automatic choice on the real dataset.
pub fn shared_grid(real: &Dataset, sel: &MetricSelection) -> Result<GridSpec> {
    match sel.cell_edge_m {
        Some(e) => GridSpec::new(e),
        None => GridSpec::new(select_cell_size(real)?.edge_m),
    }
}

/// Evaluates every selected metric of `syn` against `real`. Metric-level errors become
/// per-entry failure markers; the vector always has one entry per selected metric.
/// The model is named after the synthetic dataset.
pub fn assemble_utility_vector(
    real: &Dataset,
    syn: &Dataset,
    sel: &MetricSelection,
    env: &Environment<'_>,
) -> Result<UtilityVector> {
    sel.validate()?;
    if sel.needs_layers() && env.layers.is_none() {
        return Err(Error::MissingEnvironment(
            "the selection has realism metrics but no constraint layers were given".into(),
        ));
    }
    let pair = if sel.needs_grid() {
        let grid = match env.grid {
            Some(g) => g,
            None => shared_grid(real, sel)?,
        };
        Some(GridPair::new(real, syn, grid))
    } else {
        None
    };
    let entries: Vec<&_> = sel.entries().collect();
    let entries = entries
        .par_iter()
        .map(|e| {
            let r = match &pair {
                Some(p) if e.metric.grid_based() => e
                    .params
                    .validate()
                    .and_then(|_| p.evaluate(e.metric, &e.params)),
                _ => evaluate_metric(e.metric, real, syn, env, &e.params),
            };
            match r {
                Ok(r) if r.value.as_f64().is_some_and(|v| !v.is_finite()) => {
                    MetricResult::failed(e.metric, "non-finite value")
                }
                Ok(r) => r,
                Err(err) => MetricResult::failed(e.metric, err.to_string()),
            }
        })
        .collect();
    Ok(UtilityVector {
        model: syn.meta().name.clone(),
        entries,
    })
}

/// Models sharing the best value of one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestMark {
    pub metric: MetricId,
    pub cell: TaxonomyCell,
    pub models: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestCount {
    pub model: String,
    pub count: usize,
}

/// Per-model vectors with the identity row and the naive best-count summary. The
/// trade-off between metrics is left to the reader.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub selection: String,
    pub grid_edge_m: Option<f64>,
    /// Real dataset evaluated against itself.
    pub original: Option<UtilityVector>,
    pub models: Vec<UtilityVector>,
    /// One mark per metric, in selection order.
    pub best: Vec<BestMark>,
    pub best_counts: Vec<BestCount>,
}

impl UtilityReport {
    /// Metrics in column order.
    pub fn metrics(&self) -> Vec<MetricId> {
        self.original
            .iter()
            .chain(&self.models)
            .next()
            .map(|v| v.entries.iter().map(|e| e.metric).collect())
            .unwrap_or_default()
    }

    pub fn is_best(&self, model: &str, metric_index: usize) -> bool {
        self.best
            .get(metric_index)
            .is_some_and(|b| b.models.iter().any(|m| m == model))
    }

    pub fn best_count(&self, model: &str) -> Option<usize> {
        self.best_counts
            .iter()
            .find(|b| b.model == model)
            .map(|b| b.count)
    }
}

// values closer than this are ties
const TIE_EPS: f64 = 1e-12;

/// Marks, for each metric, the models with the best value according to its
/// direction. Ties are all marked. N/A and failed entries never win. The identity
/// row is not a competitor.
pub fn compare_models(
    selection: impl Into<String>,
    original: Option<UtilityVector>,
    models: Vec<UtilityVector>,
) -> Result<UtilityReport> {
    let layout: Vec<MetricId> = original
        .iter()
        .chain(&models)
        .next()
        .map(|v| v.entries.iter().map(|e| e.metric).collect())
        .unwrap_or_default();
    for v in original.iter().chain(&models) {
        let ids: Vec<MetricId> = v.entries.iter().map(|e| e.metric).collect();
        if ids != layout {
            return Err(Error::DimensionMismatch(format!(
                "utility vector of `{}` does not follow the shared metric layout",
                v.model
            )));
        }
    }
    let mut names: Vec<&str> = models.iter().map(|m| m.model.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("model names must be unique".into()));
    }

    let mut best = Vec::with_capacity(layout.len());
    for (i, &metric) in layout.iter().enumerate() {
        let dir = metric.direction();
        let values: Vec<(usize, f64)> = models
            .iter()
            .enumerate()
            .filter_map(|(m, v)| v.entries[i].value.as_f64().map(|x| (m, x)))
            .collect();
        let winner = values.iter().map(|&(_, x)| x).reduce(|a, b| match dir {
            Direction::LowerIsBetter => a.min(b),
            Direction::HigherIsBetter => a.max(b),
        });
        let marked = match winner {
            Some(w) => values
                .iter()
                .filter(|&&(_, x)| (x - w).abs() <= TIE_EPS)
                .map(|&(m, _)| models[m].model.clone())
                .collect(),
            None => Vec::new(),
        };
        best.push(BestMark {
            metric,
            cell: metric.cell(),
            models: marked,
        });
    }
    let best_counts = models
        .iter()
        .map(|m| BestCount {
            model: m.model.clone(),
            count: best.iter().filter(|b| b.models.contains(&m.model)).count(),
        })
        .collect();
    Ok(UtilityReport {
        selection: selection.into(),
        grid_edge_m: None,
        original,
        models,
        best,
        best_counts,
    })
}

/// Full comparison: grid derived once from `real`, the identity row, then one vector
/// per synthetic dataset (in parallel).
pub fn evaluate_models(
    real: &Dataset,
    syns: &[Dataset],
    sel: &MetricSelection,
    layers: Option<&ConstraintLayers>,
) -> Result<UtilityReport> {
    let grid = if sel.needs_grid() {
        Some(shared_grid(real, sel)?)
    } else {
        None
    };
    let env = Environment { grid, layers };
    let original = assemble_utility_vector(real, real, sel, &env)?;
    let models = syns
        .par_iter()
        .map(|s| assemble_utility_vector(real, s, sel, &env))
        .collect::<Result<Vec<_>>>()?;
    let mut original = original;
    original.model = "Original".into();
    let mut report = compare_models(sel.name.clone(), Some(original), models)?;
    report.grid_edge_m = grid.map(|g| g.cell_edge_m);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(model: &str, values: &[(MetricId, Option<f64>)]) -> UtilityVector {
        UtilityVector {
            model: model.into(),
            entries: values
                .iter()
                .map(|&(m, v)| match v {
                    Some(x) => MetricResult::value(m, x),
                    None => MetricResult::not_applicable(m, "n/a"),
                })
                .collect(),
        }
    }

    #[test]
    fn identical_vectors_tie_everywhere() {
        let ids = [
            MetricId::IRank,
            MetricId::GRank,
            MetricId::NextLocationPrediction,
        ];
        let vals: Vec<_> = ids.iter().map(|&m| (m, Some(0.3))).collect();
        let r = compare_models("s", None, vec![vector("a", &vals), vector("b", &vals)]).unwrap();
        assert!(r.best.iter().all(|b| b.models == ["a", "b"]));
        assert_eq!(r.best_count("a"), Some(3));
        assert_eq!(r.best_count("b"), Some(3));
    }

    #[test]
    fn direction_is_respected_and_na_never_wins() {
        let a = vector(
            "a",
            &[
                (MetricId::IRank, Some(0.1)),
                (MetricId::GRank, Some(0.2)),
                (MetricId::AverageSpeed, None),
            ],
        );
        let b = vector(
            "b",
            &[
                (MetricId::IRank, Some(0.2)),
                (MetricId::GRank, Some(0.9)),
                (MetricId::AverageSpeed, Some(5.0)),
            ],
        );
        let r = compare_models("s", None, vec![a, b]).unwrap();
        assert_eq!(r.best[0].models, ["a"]);
        assert_eq!(r.best[1].models, ["b"]);
        assert_eq!(r.best[2].models, ["b"]);
        assert!(r.is_best("b", 2) && !r.is_best("a", 2));
    }

    #[test]
    fn mismatched_layouts_are_rejected() {
        let a = vector("a", &[(MetricId::IRank, Some(0.1))]);
        let b = vector("b", &[(MetricId::GRank, Some(0.1))]);
        assert!(compare_models("s", None, vec![a.clone(), b]).is_err());
        assert!(compare_models("s", None, vec![a.clone(), a]).is_err());
    }

    #[test]
    fn missing_layers_is_an_error_not_a_failure() {
        use crate::mobility::{DatasetMeta, TrajPoint, Trajectory};
        let t = Trajectory::new(
            "t",
            "u",
            vec![
                TrajPoint::new(0.0, 0.0, 0.0),
                TrajPoint::new(50.0, 0.0, 10.0),
            ],
        )
        .unwrap();
        let d = Dataset::new(vec![t], DatasetMeta::projected("d")).unwrap();
        let sel = MetricSelection::preset("use-case-b").unwrap();
        let err = assemble_utility_vector(&d, &d, &sel, &Environment::default()).unwrap_err();
        assert!(matches!(err, Error::MissingEnvironment(_)));
    }
}
