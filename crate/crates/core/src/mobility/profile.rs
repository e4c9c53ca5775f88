use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Dataset descriptors: sampling regularity, temporal gaps, lengths and spatial extent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub mean_sampling_interval_min: f64,
    pub cv_sampling_interval: f64,
    /// Share of sampling intervals longer than ten times the median interval.
    pub gap_fraction: f64,
    pub n_traj: usize,
    pub median_length: f64,
    pub p95_length: f64,
    pub mean_traveled_km: f64,
    pub mean_displacement_km: f64,
}

impl DatasetProfile {
    /// Column names in output order.
    pub const HEADER: [&'static str; 8] = [
        "mean_sampling_interval_min",
        "cv_sampling_interval",
        "gap_fraction",
        "n_traj",
        "median_length",
        "p95_length",
        "mean_traveled_km",
        "mean_displacement_km",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.mean_sampling_interval_min,
            self.cv_sampling_interval,
            self.gap_fraction,
            self.n_traj as f64,
            self.median_length,
            self.p95_length,
            self.mean_traveled_km,
            self.mean_displacement_km,
        ]
    }
}

pub fn profile_dataset(d: &Dataset) -> Result<DatasetProfile> {
    if d.is_empty() {
        return Err(Error::Empty("cannot profile an empty dataset".into()));
    }
    let mut intervals = Vec::new();
    let mut segments = Vec::new();
    let mut traveled = Vec::with_capacity(d.len());
    let mut lengths = Vec::with_capacity(d.len());
    for t in d.trajectories() {
        lengths.push(t.len() as f64);
        let mut total = 0.0;
        for w in t.points.windows(2) {
            intervals.push((w[1].timestamp - w[0].timestamp) / 60.0);
            let s = w[0].point.distance(&w[1].point) / 1000.0;
            segments.push(s);
            total += s;
        }
        traveled.push(total);
    }
    // sorted before summation so the result does not depend on trajectory order
    for v in [&mut intervals, &mut segments, &mut traveled, &mut lengths] {
        v.sort_by(f64::total_cmp);
    }

    let (mean_dt, cv, gap_fraction) = if intervals.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let mean = mean(&intervals);
        let var =
            intervals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / intervals.len() as f64;
        let cv = if mean > 0.0 { var.sqrt() / mean } else { 0.0 };
        let tau = 10.0 * median_sorted(&intervals);
        let gaps = intervals.iter().filter(|&&x| x > tau).count();
        (mean, cv, gaps as f64 / intervals.len() as f64)
    };

    Ok(DatasetProfile {
        mean_sampling_interval_min: mean_dt,
        cv_sampling_interval: cv,
        gap_fraction,
        n_traj: d.len(),
        median_length: median_sorted(&lengths),
        p95_length: percentile_sorted(&lengths, 95.0),
        mean_traveled_km: mean(&traveled),
        mean_displacement_km: if segments.is_empty() {
            0.0
        } else {
            mean(&segments)
        },
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Percentile with linear interpolation between closest ranks; `v` must be sorted.
pub(crate) fn percentile_sorted(v: &[f64], q: f64) -> f64 {
    if v.len() == 1 {
        return v[0];
    }
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{DatasetMeta, TrajPoint, Trajectory};
    use approx::assert_abs_diff_eq;

    fn ds(trajs: Vec<Vec<(f64, f64, f64)>>) -> Dataset {
        let trajs = trajs
            .into_iter()
            .enumerate()
            .map(|(i, pts)| {
                let pts = pts
                    .into_iter()
                    .map(|(x, y, t)| TrajPoint::new(x, y, t))
                    .collect();
                Trajectory::new(format!("t{i}"), "u", pts).unwrap()
            })
            .collect();
        Dataset::new(trajs, DatasetMeta::projected("p")).unwrap()
    }

    #[test]
    fn single_interval() {
        let p = profile_dataset(&ds(vec![vec![(0.0, 0.0, 0.0), (0.0, 0.0, 600.0)]])).unwrap();
        assert_abs_diff_eq!(p.mean_sampling_interval_min, 10.0);
        assert_eq!(p.cv_sampling_interval, 0.0);
    }

    #[test]
    fn traveled_distance_is_sum_of_segments() {
        let p = profile_dataset(&ds(vec![vec![
            (0.0, 0.0, 0.0),
            (3000.0, 0.0, 60.0),
            (3000.0, 4000.0, 120.0),
        ]]))
        .unwrap();
        assert_abs_diff_eq!(p.mean_traveled_km, 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.mean_displacement_km, 3.5, epsilon = 1e-12);
    }

    #[test]
    fn gap_fraction_uses_ten_times_median() {
        let mins = [0.0, 1.0, 2.0, 3.0, 103.0];
        let pts = mins.iter().map(|m| (0.0, 0.0, m * 60.0)).collect();
        let p = profile_dataset(&ds(vec![pts])).unwrap();
        assert_abs_diff_eq!(p.gap_fraction, 0.25);
    }

    #[test]
    fn length_one_trajectories_contribute_no_intervals() {
        let p = profile_dataset(&ds(vec![vec![(0.0, 0.0, 0.0)]])).unwrap();
        assert_eq!(p.mean_sampling_interval_min, 0.0);
        assert_eq!(p.median_length, 1.0);
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_abs_diff_eq!(percentile_sorted(&v, 95.0), 4.8, epsilon = 1e-12);
        assert_abs_diff_eq!(median_sorted(&[1.0, 2.0, 3.0, 4.0]), 2.5);
    }
}
