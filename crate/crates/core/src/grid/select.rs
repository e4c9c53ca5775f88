use serde::{Deserialize, Serialize};

use super::{discretize, grid_diagnostics, GridSpec};
use crate::error::{Error, Result};
use crate::mobility::percentile_sorted;
use crate::mobility::Dataset;

const CANDIDATE_STEP_M: f64 = 50.0;

/// Outcome of the data-driven cell-size search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSizeSelection {
    pub edge_m: f64,
    pub p10_m: f64,
    pub p50_m: f64,
    pub candidates_m: Vec<f64>,
    /// Elbow edges of the unique-transition, self-transition and occupancy curves.
    pub elbows_m: [f64; 3],
    /// Set when the 10th and 50th percentiles coincide and no search was possible.
    pub degenerate: bool,
}

/// Picks a cell edge between the 10th and 50th percentiles of segment lengths.
///
/// Each diagnostic is evaluated on candidate edges in 50 m steps; the elbow of each
/// curve is located independently and the median of the three elbows is returned.
pub fn select_cell_size(d: &Dataset) -> Result<CellSizeSelection> {
    let mut segments: Vec<f64> = d
        .trajectories()
        .iter()
        .flat_map(|t| {
            t.points
                .windows(2)
                .map(|w| w[0].point.distance(&w[1].point))
        })
        .filter(|&s| s > 0.0)
        .collect();
    if segments.is_empty() {
        return Err(Error::Undefined(
            "cell-size selection needs at least one non-zero segment".into(),
        ));
    }
    segments.sort_by(f64::total_cmp);
    let p10 = percentile_sorted(&segments, 10.0);
    let p50 = percentile_sorted(&segments, 50.0);
    if p50 - p10 <= 1e-9 {
        log::warn!(
            "segment lengths are degenerate (P10 = P50 = {p10} m); using it as the cell edge"
        );
        return Ok(CellSizeSelection {
            edge_m: p10,
            p10_m: p10,
            p50_m: p50,
            candidates_m: vec![p10],
            elbows_m: [p10; 3],
            degenerate: true,
        });
    }

    let mut candidates = Vec::new();
    let mut e = p10;
    while e < p50 - 1e-9 {
        candidates.push(e);
        e += CANDIDATE_STEP_M;
    }
    candidates.push(p50);

    let mut curves = [Vec::new(), Vec::new(), Vec::new()];
    for &edge in &candidates {
        let diag = grid_diagnostics(&discretize(d, &GridSpec::new(edge)?))?;
        curves[0].push(diag.unique_transition_fraction);
        curves[1].push(diag.self_transition_fraction);
        curves[2].push(diag.occupancy_ratio);
    }
    let mut elbows = [0.0; 3];
    for (k, ys) in curves.iter().enumerate() {
        elbows[k] = match kneedle_elbow(&candidates, ys) {
            Some(i) => candidates[i],
            None => (p10 + p50) / 2.0,
        };
    }
    let mut sorted = elbows;
    sorted.sort_by(f64::total_cmp);
    Ok(CellSizeSelection {
        edge_m: sorted[1],
        p10_m: p10,
        p50_m: p50,
        candidates_m: candidates,
        elbows_m: elbows,
        degenerate: false,
    })
}

/// Index of the point farthest from the chord joining the first and last points,
/// after scaling both axes to `[0, 1]`. Ties go to the smallest index. Returns
/// `None` when the curve is flat or has fewer than three points.
pub fn kneedle_elbow(xs: &[f64], ys: &[f64]) -> Option<usize> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return None;
    }
    let (x0, x1) = (xs[0], xs[n - 1]);
    let (ymin, ymax) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| {
            (a.min(y), b.max(y))
        });
    if x1 - x0 <= 0.0 || ymax - ymin <= 1e-12 {
        return None;
    }
    let nx: Vec<f64> = xs.iter().map(|x| (x - x0) / (x1 - x0)).collect();
    let ny: Vec<f64> = ys.iter().map(|y| (y - ymin) / (ymax - ymin)).collect();
    let (ax, ay, bx, by) = (nx[0], ny[0], nx[n - 1], ny[n - 1]);
    let (dx, dy) = (bx - ax, by - ay);
    let norm = dx.hypot(dy);
    let mut best: Option<(usize, f64)> = None;
    for i in 1..n - 1 {
        let dist = ((nx[i] - ax) * dy - (ny[i] - ay) * dx).abs() / norm;
        if best.is_none_or(|(_, b)| dist > b + 1e-12) {
            best = Some((i, dist));
        }
    }
    best.filter(|&(_, d)| d > 1e-12).map(|(i, _)| i)
}
