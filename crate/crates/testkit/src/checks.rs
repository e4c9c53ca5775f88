//! Expected values of the identity ("Original") row of a utility report.

use trajeval_core::framework::UtilityVector;
use trajeval_core::grid::{discretize, GridSpec};
use trajeval_core::metrics::{
    build_transition_matrix, global_flow_prediction, location_implausibility,
    map_reconstruction_metric, trajectory_implausibility, ConstraintLayers, MetricId, MetricParams,
};
use trajeval_core::mobility::Dataset;

pub const IDENTITY_TOL: f64 = 1e-9;

/// Every mismatch between an identity row and its expected pattern: W1-type
/// entries 0, tau_b entries 1, category-location match 1, realism entries and
/// global flow prediction (the real chain forecasting its own flow) equal to the
/// direct computation on `d`, anything else a finite value.
pub fn identity_row_violations(
    row: &UtilityVector,
    d: &Dataset,
    grid: Option<GridSpec>,
    layers: Option<&ConstraintLayers>,
    params: &MetricParams,
) -> Vec<String> {
    let mut out = Vec::new();
    for e in &row.entries {
        let Some(v) = e.value.as_f64() else {
            out.push(format!("{}: no value ({:?})", e.metric, e.value));
            continue;
        };
        let expected = match e.metric {
            MetricId::CategoryLocationMatch => Some(1.0),
            MetricId::TrajectoryImplausibility => layers
                .and_then(|l| trajectory_implausibility(d, l, params.delta_m).ok())
                .and_then(|r| r.value.as_f64()),
            MetricId::LocationImplausibility => layers
                .and_then(|l| location_implausibility(d, l, params.delta_m).ok())
                .and_then(|r| r.value.as_f64()),
            MetricId::MapReconstruction => layers
                .and_then(|l| map_reconstruction_metric(d, d, l).ok())
                .and_then(|r| r.value.as_f64()),
            MetricId::GlobalFlowPrediction => grid.and_then(|g| {
                let dd = discretize(d, &g);
                let tm = build_transition_matrix(&dd).ok()?;
                global_flow_prediction(&tm, &dd).ok()?.value.as_f64()
            }),
            m if m.units() == "tau_b" => Some(1.0),
            m if m.units().contains("W1") => Some(0.0),
            _ => None,
        };
        match expected {
            Some(x) if (v - x).abs() > IDENTITY_TOL => {
                out.push(format!("{}: {v} != {x}", e.metric))
            }
            None if !v.is_finite() => out.push(format!("{}: non-finite {v}", e.metric)),
            _ => {}
        }
    }
    out
}
