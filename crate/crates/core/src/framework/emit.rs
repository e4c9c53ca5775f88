//! Deterministic JSON, CSV and SVG renderings of a [`UtilityReport`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::{UtilityReport, UtilityVector};
use crate::error::{Error, Result};
use crate::metrics::{Direction, Level, MetricId, MetricValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
    Svg,
}

impl ReportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Svg => "svg",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format `{other}` (json, csv, svg)"
            ))),
        }
    }
}

pub fn render_json(r: &UtilityReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serialises");
    s.push('\n');
    s
}

pub fn parse_json(s: &str) -> Result<UtilityReport> {
    Ok(serde_json::from_str(s)?)
}

pub const CSV_HEADER: [&str; 9] = [
    "model",
    "cell",
    "metric",
    "direction",
    "units",
    "status",
    "value",
    "best",
    "notes",
];

fn direction_str(d: Direction) -> &'static str {
    match d {
        Direction::LowerIsBetter => "lower",
        Direction::HigherIsBetter => "higher",
    }
}

/// One row per (model, metric), identity row first. `best` is empty on the identity row.
pub fn render_csv(r: &UtilityReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    let rows = r
        .original
        .iter()
        .map(|v| (v, false))
        .chain(r.models.iter().map(|v| (v, true)));
    for (v, competes) in rows {
        for (i, e) in v.entries.iter().enumerate() {
            let (status, value, mut notes) = match &e.value {
                MetricValue::Value(x) => ("value", x.to_string(), String::new()),
                MetricValue::NotApplicable(why) => ("n/a", String::new(), why.clone()),
                MetricValue::Failed(why) => ("failed", String::new(), why.clone()),
            };
            for n in &e.notes {
                if !notes.is_empty() {
                    notes.push_str("; ");
                }
                notes.push_str(n);
            }
            let best = if competes {
                r.is_best(&v.model, i).to_string()
            } else {
                String::new()
            };
            w.write_record([
                v.model.as_str(),
                &e.cell.key(),
                e.metric.id(),
                direction_str(e.direction),
                &e.units,
                status,
                &value,
                &best,
                &notes,
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Three decimals as in published tables; tiny positive values read `<0.001`.
pub fn format_value(v: &MetricValue) -> String {
    match v {
        MetricValue::Value(x) if *x > 0.0 && *x < 0.0005 => "<0.001".into(),
        MetricValue::Value(x) => {
            let s = format!("{x:.3}");
            if s == "-0.000" {
                "0.000".into()
            } else {
                s
            }
        }
        MetricValue::NotApplicable(_) => "N/A".into(),
        MetricValue::Failed(_) => "fail".into(),
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn metric_header(m: MetricId) -> String {
    format!("{} ({})", m.title(), m.units())
}

const MODEL_W: usize = 150;
const COL_W: usize = 170;
const ROW_H: usize = 24;

/// Table layout: trajectory-level columns then point-level columns, one row per
/// model under the identity row, best values in bold.
pub fn render_svg(r: &UtilityReport) -> String {
    let metrics = r.metrics();
    let rows: Vec<(&UtilityVector, bool)> = r
        .original
        .iter()
        .map(|v| (v, false))
        .chain(r.models.iter().map(|v| (v, true)))
        .collect();
    let width = MODEL_W + COL_W * metrics.len().max(1);
    let height = ROW_H * (4 + rows.len());
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="6" y="{}" font-size="13">Selection: {}</text>"#,
        ROW_H - 8,
        xml_escape(&r.selection)
    );
    // level banners
    for level in [Level::Trajectory, Level::Point] {
        let idx: Vec<usize> = metrics
            .iter()
            .enumerate()
            .filter(|(_, m)| m.cell().level == level)
            .map(|(i, _)| i)
            .collect();
        if let (Some(&a), Some(&b)) = (idx.first(), idx.last()) {
            let x = MODEL_W + COL_W * a;
            let w = COL_W * (b - a + 1);
            let label = match level {
                Level::Trajectory => "Trajectory level",
                Level::Point => "Point level",
            };
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" font-weight="bold">{label}</text>"#,
                x + w / 2,
                2 * ROW_H - 8
            );
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
                x + 4,
                2 * ROW_H - 4,
                x + w - 4,
                2 * ROW_H - 4
            );
        }
    }
    let _ = writeln!(s, r#"<text x="6" y="{}">Model</text>"#, 3 * ROW_H - 8);
    for (i, &m) in metrics.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="9">{}</text>"#,
            MODEL_W + COL_W * i + COL_W / 2,
            3 * ROW_H - 8,
            xml_escape(&metric_header(m))
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="0" y1="{y}" x2="{width}" y2="{y}" stroke="black"/>"#,
        y = 3 * ROW_H - 2
    );
    for (ri, (v, competes)) in rows.iter().enumerate() {
        let y = (4 + ri) * ROW_H - 8;
        let _ = writeln!(s, r#"<text x="6" y="{y}">{}</text>"#, xml_escape(&v.model));
        for (i, e) in v.entries.iter().enumerate() {
            let bold = *competes && r.is_best(&v.model, i);
            let weight = if bold { r#" font-weight="bold""# } else { "" };
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{y}" text-anchor="middle"{weight}>{}</text>"#,
                MODEL_W + COL_W * i + COL_W / 2,
                xml_escape(&format_value(&e.value))
            );
        }
        if ri == 0 && r.original.is_some() {
            let _ = writeln!(
                s,
                r#"<line x1="0" y1="{y2}" x2="{width}" y2="{y2}" stroke="black" stroke-dasharray="3,3"/>"#,
                y2 = y + 6
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn render(r: &UtilityReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => render_json(r),
        ReportFormat::Csv => render_csv(r),
        ReportFormat::Svg => render_svg(r),
    }
}

/// Writes `report.<ext>` into `dir` (created if missing) and returns its path.
pub fn emit_report(r: &UtilityReport, format: ReportFormat, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("report.{}", format.extension()));
    std::fs::write(&path, render(r, format)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
