use std::time::Instant;

use trajeval_core::framework::{evaluate_models, MetricSelection, PRESETS};
use trajeval_core::grid::GridSpec;
use trajeval_core::metrics::MetricParams;
use trajeval_testkit::checks::identity_row_violations;
use trajeval_testkit::fixtures::{city_layers, default_city};

#[test]
fn city_fixture_is_big_enough() {
    let d = default_city();
    assert!(d.len() >= 50);
    assert!(d.has_categories());
}

#[test]
fn identity_rows_match_the_original_pattern_for_both_presets() {
    let d = default_city();
    let layers = city_layers();
    for preset in PRESETS {
        let start = Instant::now();
        let sel = MetricSelection::preset(preset).unwrap();
        let report = evaluate_models(&d, std::slice::from_ref(&d), &sel, Some(&layers)).unwrap();
        let original = report.original.as_ref().unwrap();
        let grid = report.grid_edge_m.map(|e| GridSpec::new(e).unwrap());
        let bad =
            identity_row_violations(original, &d, grid, Some(&layers), &MetricParams::default());
        assert!(bad.is_empty(), "{preset}: {bad:?}");
        // the model row is the same comparison
        let bad = identity_row_violations(
            &report.models[0],
            &d,
            grid,
            Some(&layers),
            &MetricParams::default(),
        );
        assert!(bad.is_empty(), "{preset}: {bad:?}");
        assert!(start.elapsed().as_secs() < 60);
    }
}

#[test]
fn city_has_some_but_not_all_implausible_trajectories() {
    use trajeval_core::metrics::{trajectory_implausibility, DEFAULT_DELTA_M};
    let r = trajectory_implausibility(&default_city(), &city_layers(), DEFAULT_DELTA_M).unwrap();
    let v = r.value.as_f64().unwrap();
    assert!(v > 0.0 && v < 0.5, "{v}");
}
