//! Record-to-record distances and the attack score `alpha`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{cosine_distance, discrete_frechet};
use crate::mobility::{masked_len, Dataset, Trajectory};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    /// Discrete Fréchet over coordinates, km.
    #[default]
    Frechet,
    /// Fréchet (km) plus weighted cosine dissimilarities of semantic feature histograms.
    Custom,
}

/// Weights of the semantic terms of the custom distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureWeights {
    pub category: f64,
    pub hour: f64,
    pub weekday: f64,
}

impl Default for FeatureWeights {
    fn default() -> Self {
        Self {
            category: 1.0,
            hour: 1.0,
            weekday: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDistance {
    pub kind: DistanceKind,
    pub weights: FeatureWeights,
}

impl TrajectoryDistance {
    pub fn frechet() -> Self {
        Self::default()
    }

    pub fn custom(weights: FeatureWeights) -> Self {
        Self {
            kind: DistanceKind::Custom,
            weights,
        }
    }

    pub fn distance(&self, a: &Trajectory, b: &Trajectory) -> Result<f64> {
        Prepared::new(a).distance(&Prepared::new(b), self)
    }
}

/// Trajectory with the pieces every distance needs precomputed.
#[derive(Clone, Debug)]
pub(crate) struct Prepared {
    xy_km: Vec<[f64; 2]>,
    categories: Vec<f64>,
    hours: [f64; 24],
    weekdays: [f64; 7],
}

const DAY_S: f64 = 86_400.0;

impl Prepared {
    pub(crate) fn new(t: &Trajectory) -> Self {
        let mut categories = Vec::new();
        let mut hours = [0.0; 24];
        let mut weekdays = [0.0; 7];
        for p in &t.points {
            if let Some(c) = p.category {
                let i = c.0 as usize;
                if categories.len() <= i {
                    categories.resize(i + 1, 0.0);
                }
                categories[i] += 1.0;
            }
            let day = (p.timestamp / DAY_S).floor();
            let hour = ((p.timestamp - day * DAY_S) / 3600.0).floor() as usize;
            hours[hour.min(23)] += 1.0;
            // the epoch fell on a Thursday; index 0 = Monday
            weekdays[((day as i64 + 3).rem_euclid(7)) as usize] += 1.0;
        }
        Self {
            xy_km: t
                .points
                .iter()
                .map(|p| [p.point.x / 1000.0, p.point.y / 1000.0])
                .collect(),
            categories,
            hours,
            weekdays,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.xy_km.len()
    }

    pub(crate) fn distance(&self, other: &Prepared, d: &TrajectoryDistance) -> Result<f64> {
        let geo = discrete_frechet(&self.xy_km, &other.xy_km)?;
        if d.kind == DistanceKind::Frechet {
            return Ok(geo);
        }
        let w = d.weights;
        let n = self.categories.len().max(other.categories.len());
        let pad = |v: &[f64]| {
            let mut v = v.to_vec();
            v.resize(n, 0.0);
            v
        };
        let cat = dissimilarity(&pad(&self.categories), &pad(&other.categories))?;
        let hour = dissimilarity(&self.hours, &other.hours)?;
        let weekday = dissimilarity(&self.weekdays, &other.weekdays)?;
        Ok(geo + w.category * cat + w.hour * hour + w.weekday * weekday)
    }
}

/// Cosine dissimilarity extended to empty histograms: both empty agree, one empty
/// is maximally different.
fn dissimilarity(u: &[f64], v: &[f64]) -> Result<f64> {
    let zu = u.iter().all(|&x| x == 0.0);
    let zv = v.iter().all(|&x| x == 0.0);
    match (zu, zv) {
        (true, true) => Ok(0.0),
        (true, false) | (false, true) => Ok(1.0),
        _ => cosine_distance(u, v),
    }
}

/// Candidate filter on the number of visits: which released lengths are comparable to a
/// target of a given (possibly masked) length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LengthFilter {
    Off,
    /// Candidates of exactly the target's length, widened to +-1 then +-2.
    SameLength,
    /// The target was masked with this keep fraction: candidates whose masked
    /// length matches, widened the same way.
    Masked(f64),
}

/// Largest widening tried before giving up.
pub const MAX_RELAXATION: usize = 2;

/// Score of one target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub alpha: f64,
    /// How far the length filter had to be widened (0 = exact match).
    pub relaxation: usize,
}

/// A released dataset indexed for repeated `alpha` queries.
pub struct ReleasedIndex {
    records: Vec<Prepared>,
    by_len: BTreeMap<usize, Vec<usize>>,
    distance: TrajectoryDistance,
}

impl ReleasedIndex {
    pub fn new(released: &Dataset, distance: TrajectoryDistance) -> Self {
        let records: Vec<Prepared> = released.trajectories().iter().map(Prepared::new).collect();
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            by_len.entry(r.len()).or_default().push(i);
        }
        Self {
            records,
            by_len,
            distance,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn candidates(&self, target_len: usize, filter: LengthFilter, widen: usize) -> Vec<usize> {
        let comparable = |n: usize| match filter {
            LengthFilter::Off => true,
            LengthFilter::SameLength => n.abs_diff(target_len) <= widen,
            LengthFilter::Masked(f) => masked_len(n, f).abs_diff(target_len) <= widen,
        };
        self.by_len
            .iter()
            .filter(|(&n, _)| comparable(n))
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect()
    }

    /// `min d(x, y)` over comparable released records `y`.
    pub fn alpha(&self, target: &Trajectory, filter: LengthFilter) -> Result<Alpha> {
        let x = Prepared::new(target);
        let max_widen = if filter == LengthFilter::Off {
            0
        } else {
            MAX_RELAXATION
        };
        for widen in 0..=max_widen {
            let cand = self.candidates(x.len(), filter, widen);
            if cand.is_empty() {
                continue;
            }
            let mut best = f64::INFINITY;
            for i in cand {
                best = best.min(x.distance(&self.records[i], &self.distance)?);
                if best == 0.0 {
                    break;
                }
            }
            return Ok(Alpha {
                alpha: best,
                relaxation: widen,
            });
        }
        Err(Error::NoCandidate(format!(
            "no released record of comparable length for `{}` ({} visits)",
            target.traj_id,
            target.len()
        )))
    }
}

/// One-shot `alpha`; prefer [`ReleasedIndex`] for many targets.
pub fn compute_alpha(
    target: &Trajectory,
    released: &Dataset,
    distance: &TrajectoryDistance,
    filter: LengthFilter,
) -> Result<Alpha> {
    ReleasedIndex::new(released, *distance).alpha(target, filter)
}

/// Discrete Fréchet (km) plus weighted semantic cosine dissimilarities.
pub fn custom_distance(a: &Trajectory, b: &Trajectory, weights: &FeatureWeights) -> Result<f64> {
    TrajectoryDistance::custom(*weights).distance(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{CategoryId, CategoryVocabulary, DatasetMeta, TrajPoint};
    use approx::assert_abs_diff_eq;

    fn traj(id: &str, pts: &[(f64, f64)], cat: Option<u16>) -> Trajectory {
        let points = pts
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| {
                let p = TrajPoint::new(x, y, 1_000.0 + k as f64 * 600.0);
                match cat {
                    Some(c) => p.with_category(CategoryId(c)),
                    None => p,
                }
            })
            .collect();
        Trajectory::new(id, "u", points).unwrap()
    }

    fn dataset(ts: Vec<Trajectory>) -> Dataset {
        let v = CategoryVocabulary::new(["a", "b"]).unwrap();
        Dataset::new(ts, DatasetMeta::projected("r").with_vocabulary(v)).unwrap()
    }

    #[test]
    fn verbatim_member_scores_zero() {
        let x = traj("x", &[(0.0, 0.0), (100.0, 0.0), (200.0, 50.0)], Some(0));
        let other = traj("o", &[(5e3, 0.0), (5e3, 100.0), (5e3, 200.0)], Some(1));
        let r = dataset(vec![other, x.clone()]);
        for d in [
            TrajectoryDistance::frechet(),
            TrajectoryDistance::custom(FeatureWeights::default()),
        ] {
            let a = compute_alpha(&x, &r, &d, LengthFilter::SameLength).unwrap();
            assert_eq!(
                a,
                Alpha {
                    alpha: 0.0,
                    relaxation: 0
                }
            );
        }
    }

    #[test]
    fn uniform_offset_gives_offset_in_km() {
        let x = traj("x", &[(0.0, 0.0), (300.0, 400.0)], None);
        let y = traj("y", &[(1000.0, 0.0), (1300.0, 400.0)], None);
        let a = compute_alpha(
            &x,
            &dataset(vec![y]),
            &TrajectoryDistance::frechet(),
            LengthFilter::SameLength,
        )
        .unwrap();
        assert_abs_diff_eq!(a.alpha, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_categories_add_one() {
        let pts = [(0.0, 0.0), (10.0, 0.0)];
        let d = custom_distance(
            &traj("a", &pts, Some(0)),
            &traj("b", &pts, Some(1)),
            &FeatureWeights::default(),
        )
        .unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn length_filter_relaxes_then_fails() {
        let x = traj("x", &[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], None);
        let five = traj("f", &[(0.0, 0.0); 5], None);
        let r = dataset(vec![five]);
        let d = TrajectoryDistance::frechet();
        assert_eq!(
            compute_alpha(&x, &r, &d, LengthFilter::SameLength)
                .unwrap()
                .relaxation,
            2
        );
        let six = traj("s", &[(0.0, 0.0); 6], None);
        assert!(matches!(
            compute_alpha(
                &x,
                &dataset(vec![six.clone()]),
                &d,
                LengthFilter::SameLength
            ),
            Err(Error::NoCandidate(_))
        ));
        assert_eq!(
            compute_alpha(&x, &dataset(vec![six]), &d, LengthFilter::Off)
                .unwrap()
                .relaxation,
            0
        );
    }

    #[test]
    fn masked_filter_matches_masked_lengths() {
        // 8 visits at keep 0.25 -> 2 visits
        let full = traj("f", &[(0.0, 0.0); 8], None);
        let x = traj("x", &[(0.0, 0.0); 2], None);
        let a = compute_alpha(
            &x,
            &dataset(vec![full]),
            &TrajectoryDistance::frechet(),
            LengthFilter::Masked(0.25),
        )
        .unwrap();
        assert_eq!(
            a,
            Alpha {
                alpha: 0.0,
                relaxation: 0
            }
        );
    }

    #[test]
    fn semantic_histograms() {
        let p = Prepared::new(&traj("a", &[(0.0, 0.0)], None));
        // 1000 s after the epoch: Thursday, hour 0
        assert_eq!(p.hours[0], 1.0);
        assert_eq!(p.weekdays[3], 1.0);
        assert_eq!(dissimilarity(&[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(dissimilarity(&[0.0], &[2.0]).unwrap(), 1.0);
    }
}
