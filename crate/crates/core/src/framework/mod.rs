//! Metric selection over the eight taxonomy cells, utility vectors and
//! cross-model reports.

mod emit;
mod report;
mod selection;

pub use emit::{
    emit_report, format_value, parse_json, render, render_csv, render_json, render_svg,
    ReportFormat, CSV_HEADER,
};
pub use report::{
    assemble_utility_vector, compare_models, evaluate_models, shared_grid, BestCount, BestMark,
    UtilityReport, UtilityVector,
};
pub use selection::{MetricEntry, MetricSelection, PRESETS};
